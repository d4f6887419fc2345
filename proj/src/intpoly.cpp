#include "coho/intpoly.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "coho/errors.hpp"

namespace coho {

namespace {

using int128 = __int128;

long long to_ll(int128 v) {
    if (v > int128(INT64_MAX) || v < int128(INT64_MIN))
        throw Error("intpoly: 64-bit overflow");
    return static_cast<long long>(v);
}

// trial division of p by a monic integer polynomial q; returns quotient
// if the division is exact, empty vector otherwise
IntPoly try_divide(const IntPoly& p, const IntPoly& q) {
    int dp = int(p.size()) - 1, dq = int(q.size()) - 1;
    if (dq > dp) return {};
    IntPoly rem = p, quot(dp - dq + 1, 0);
    for (int k = dp - dq; k >= 0; --k) {
        long long c = rem[k + dq];  // q monic
        quot[k] = c;
        for (int j = 0; j <= dq; ++j) rem[k + j] -= c * q[j];
    }
    for (int j = 0; j < dq; ++j)
        if (rem[j] != 0) return {};
    return quot;
}

long long eval_poly(const IntPoly& p, long long x) {
    int128 acc = 0;
    for (int i = int(p.size()) - 1; i >= 0; --i) acc = acc * x + p[i];
    return to_ll(acc);
}

std::vector<long long> divisors_of(long long v) {
    if (v < 0) v = -v;
    std::vector<long long> ds;
    for (long long d = 1; d * d <= v; ++d) {
        if (v % d == 0) {
            ds.push_back(d);
            if (d != v / d) ds.push_back(v / d);
        }
    }
    std::sort(ds.begin(), ds.end());
    return ds;
}

} // namespace

long long int_det(const IntMatrix& a) {
    const int n = int(a.rows());
    if (n == 0) return 1;
    std::vector<std::vector<int128>> m(n, std::vector<int128>(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m[i][j] = a(i, j);

    int sign = 1;
    int128 prev = 1;
    for (int k = 0; k < n - 1; ++k) {
        if (m[k][k] == 0) {
            int piv = -1;
            for (int i = k + 1; i < n; ++i)
                if (m[i][k] != 0) { piv = i; break; }
            if (piv < 0) return 0;
            std::swap(m[k], m[piv]);
            sign = -sign;
        }
        for (int i = k + 1; i < n; ++i)
            for (int j = k + 1; j < n; ++j)
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
        prev = m[k][k];
    }
    return sign * to_ll(m[n - 1][n - 1]);
}

IntPoly char_poly(const IntMatrix& a) {
    const int d = int(a.rows());
    // det(xI - A) is monic of degree d: interpolate from d+1 exact samples.
    std::vector<long long> xs(d + 1), ys(d + 1);
    for (int k = 0; k <= d; ++k) {
        xs[k] = k;
        IntMatrix m = -a;
        for (int i = 0; i < d; ++i) m(i, i) += k;
        ys[k] = int_det(m);
    }
    // Newton's divided differences are exact integers for integer-valued
    // polynomials sampled at consecutive integers.
    std::vector<int128> dd(ys.begin(), ys.end());
    for (int level = 1; level <= d; ++level)
        for (int i = d; i >= level; --i)
            dd[i] = (dd[i] - dd[i - 1]) / (xs[i] - xs[i - level]);
    // expand Newton form sum_k dd[k] * prod_{j<k} (x - j)
    std::vector<int128> coeff(d + 1, 0), basis{1};
    for (int k = 0; k <= d; ++k) {
        for (size_t j = 0; j < basis.size(); ++j) coeff[j] += dd[k] * basis[j];
        if (k < d) {
            basis.push_back(0);
            for (int j = int(basis.size()) - 1; j > 0; --j)
                basis[j] = basis[j - 1] - int128(k) * basis[j];
            basis[0] *= -int128(k);
        }
    }
    IntPoly out(d + 1);
    for (int i = 0; i <= d; ++i) out[i] = to_ll(coeff[i]);
    return out;
}

std::vector<IntPoly> factor_monic(const IntPoly& p) {
    int deg = int(p.size()) - 1;
    if (deg <= 0) return {};
    if (p.back() != 1) throw Error("factor_monic: polynomial not monic");
    if (deg == 1) return {p};

    // strip integer roots first (rational roots of a monic poly are integers)
    if (p[0] == 0) {
        IntPoly lin{0, 1};
        auto rest = factor_monic(try_divide(p, lin));
        rest.push_back(lin);
        return rest;
    }
    for (long long d : divisors_of(p[0])) {
        for (long long r : {d, -d}) {
            if (eval_poly(p, r) == 0) {
                IntPoly lin{-r, 1};
                auto rest = factor_monic(try_divide(p, lin));
                rest.push_back(lin);
                return rest;
            }
        }
    }
    // no rational roots from here on
    if (deg == 2 || deg == 3) return {p};  // cubic without rational root is irreducible
    if (deg == 4) {
        // try (x^2+bx+c)(x^2+ex+f) with integer b,c,e,f; c*f = p[0]
        for (long long c : divisors_of(p[0])) {
            for (long long cs : {c, -c}) {
                if (p[0] % cs != 0) continue;
                long long f = p[0] / cs;
                // b+e = p[3]; c+f+be = p[2]; bf+ce = p[1]
                for (long long b = -64; b <= 64; ++b) {
                    long long e = p[3] - b;
                    if (cs + f + b * e != p[2]) continue;
                    if (b * f + cs * e != p[1]) continue;
                    IntPoly q1{cs, b, 1}, q2{f, e, 1};
                    std::vector<IntPoly> out;
                    auto f1 = factor_monic(q1), f2 = factor_monic(q2);
                    out.insert(out.end(), f1.begin(), f1.end());
                    out.insert(out.end(), f2.begin(), f2.end());
                    return out;
                }
            }
        }
        return {p};
    }
    if (deg <= 6) {
        // quadratic factor search; sufficient for the block-diagonal
        // automorphisms this project works with
        for (long long c : divisors_of(p[0])) {
            for (long long cs : {c, -c}) {
                for (long long b = -64; b <= 64; ++b) {
                    IntPoly q{cs, b, 1};
                    IntPoly quot = try_divide(p, q);
                    if (!quot.empty()) {
                        auto rest = factor_monic(quot);
                        auto fq = factor_monic(q);
                        rest.insert(rest.end(), fq.begin(), fq.end());
                        return rest;
                    }
                }
            }
        }
        return {p};
    }
    throw Error("factor_monic: degree > 6 not supported");
}

std::vector<std::complex<double>> poly_roots(const IntPoly& p) {
    int deg = int(p.size()) - 1;
    std::vector<std::complex<double>> roots;
    if (deg == 1) {
        roots.emplace_back(double(-p[0]), 0.0);
        return roots;
    }
    if (deg == 2) {
        double b = double(p[1]), c = double(p[0]);
        double disc = b * b - 4.0 * c;
        if (disc >= 0) {
            double s = std::sqrt(disc);
            roots.emplace_back((-b + s) / 2.0, 0.0);
            roots.emplace_back((-b - s) / 2.0, 0.0);
        } else {
            double s = std::sqrt(-disc);
            roots.emplace_back(-b / 2.0, s / 2.0);
            roots.emplace_back(-b / 2.0, -s / 2.0);
        }
        return roots;
    }
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(deg, deg);
    for (int i = 0; i < deg; ++i) companion(i, deg - 1) = -double(p[i]);
    for (int i = 1; i < deg; ++i) companion(i, i - 1) = 1.0;
    Eigen::EigenSolver<Eigen::MatrixXd> es(companion);
    for (int i = 0; i < deg; ++i) roots.push_back(es.eigenvalues()(i));
    return roots;
}

std::vector<double> root_moduli(const IntPoly& p, double tol) {
    std::vector<double> mods;
    for (auto& r : poly_roots(p)) mods.push_back(std::abs(r));
    std::sort(mods.begin(), mods.end());
    std::vector<double> out;
    for (double m : mods)
        if (out.empty() || m - out.back() > tol) out.push_back(m);
    return out;
}

} // namespace coho
