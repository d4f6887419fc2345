#include "coho/torus.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "coho/errors.hpp"
#include "coho/util.hpp"

namespace coho {

namespace {

using int128 = __int128;

long long checked_ll(int128 v, const char* where) {
    if (v > int128(INT64_MAX) || v < int128(INT64_MIN))
        throw Error(std::string("rational overflow in ") + where);
    return static_cast<long long>(v);
}

constexpr double kTwoPi = 6.283185307179586476925286766559;

} // namespace

Rational::Rational(long long n, long long d) : num(n), den(d) {
    if (den == 0) throw Error("Rational: zero denominator");
    if (den < 0) { num = -num; den = -den; }
    long long g = gcd_ll(num, den);
    if (g > 1) { num /= g; den /= g; }
}

Rational Rational::operator+(const Rational& o) const {
    long long g = gcd_ll(den, o.den);
    int128 n = int128(num) * (o.den / g) + int128(o.num) * (den / g);
    int128 d = int128(den / g) * o.den;
    return Rational(checked_ll(n, "Rational::operator+"),
                    checked_ll(d, "Rational::operator+"));
}

Rational Rational::operator-(const Rational& o) const {
    return *this + Rational(-o.num, o.den);
}

Rational Rational::operator*(const Rational& o) const {
    long long g1 = gcd_ll(num, o.den), g2 = gcd_ll(o.num, den);
    int128 n = int128(num / g1) * (o.num / g2);
    int128 d = int128(den / g2) * (o.den / g1);
    return Rational(checked_ll(n, "Rational::operator*"), checked_ll(d, "Rational::operator*"));
}

bool Rational::operator<(const Rational& o) const {
    return int128(num) * o.den < int128(o.num) * den;
}

Rational Rational::frac() const {
    long long m = num % den;
    if (m < 0) m += den;
    return Rational(m, den);
}

std::string Rational::to_string() const {
    std::ostringstream os;
    os << num << '/' << den;
    return os.str();
}

Rational Rational::parse(const std::string& s) {
    size_t slash = s.find('/');
    if (slash == std::string::npos) return Rational(std::stoll(s), 1);
    return Rational(std::stoll(s.substr(0, slash)), std::stoll(s.substr(slash + 1)));
}

// ---------------------------------------------------------------------------
// Smith normal form over Z (long long entries)

namespace {

bool snf_is_clear(const IntMatrix& d, int s) {
    const int m = int(d.rows()), n = int(d.cols());
    for (int i = s + 1; i < m; ++i)
        if (d(i, s) != 0) return false;
    for (int j = s + 1; j < n; ++j)
        if (d(s, j) != 0) return false;
    return true;
}

void snf_locate_min(const IntMatrix& d, int s, int& ir, int& ic) {
    long long best = 0;
    ir = ic = s;
    for (int i = s; i < d.rows(); ++i)
        for (int j = s; j < d.cols(); ++j) {
            long long v = std::llabs(d(i, j));
            if (v != 0 && (best == 0 || v < best)) {
                best = v;
                ir = i;
                ic = j;
            }
        }
}

} // namespace

void smith_normal_form(const IntMatrix& a, IntMatrix& u, IntMatrix& d, IntMatrix& v) {
    const int m = int(a.rows()), n = int(a.cols());
    u = IntMatrix::Identity(m, m);
    v = IntMatrix::Identity(n, n);
    d = a;
    const int nmin = std::min(m, n);
    for (int s = 0; s < nmin; ++s) {
        while (!snf_is_clear(d, s)) {
            int ir, ic;
            snf_locate_min(d, s, ir, ic);
            d.row(s).swap(d.row(ir));
            u.row(s).swap(u.row(ir));
            d.col(s).swap(d.col(ic));
            v.col(s).swap(v.col(ic));
            for (int i = s + 1; i < m; ++i) {
                if (d(i, s) != 0) {
                    long long q = d(i, s) / d(s, s);
                    d.row(i) -= q * d.row(s);
                    u.row(i) -= q * u.row(s);
                }
            }
            for (int j = s + 1; j < n; ++j) {
                if (d(s, j) != 0) {
                    long long q = d(s, j) / d(s, s);
                    d.col(j) -= q * d.col(s);
                    v.col(j) -= q * v.col(s);
                }
            }
        }
        if (d(s, s) < 0) {
            d.row(s) *= -1;
            u.row(s) *= -1;
        }
        // enforce divisibility d(s,s) | d(i,j)
        if (d(s, s) != 0) {
            for (int i = s + 1; i < m; ++i) {
                for (int j = s + 1; j < n; ++j) {
                    if (d(i, j) % d(s, s) != 0) {
                        d.row(s) += d.row(i);
                        u.row(s) += u.row(i);
                        i = m; // restart clearing for this corner
                        break;
                    }
                }
            }
            if (!snf_is_clear(d, s)) { --s; continue; }
        }
    }
}

IntMatrix unimodular_inverse(const IntMatrix& a) {
    const int n = int(a.rows());
    long long det = int_det(a);
    if (det != 1 && det != -1) throw Error("unimodular_inverse: |det| != 1");
    // adjugate via cofactors (n <= 6 in practice)
    IntMatrix adj(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            IntMatrix minor(n - 1, n - 1);
            for (int r = 0, rr = 0; r < n; ++r) {
                if (r == i) continue;
                for (int c = 0, cc = 0; c < n; ++c) {
                    if (c == j) continue;
                    minor(rr, cc++) = a(r, c);
                }
                ++rr;
            }
            long long cof = ((i + j) % 2 == 0 ? 1 : -1) * (n > 1 ? int_det(minor) : 1);
            adj(j, i) = cof;
        }
    }
    return det == 1 ? adj : IntMatrix(-adj);
}

// ---------------------------------------------------------------------------

ToralAutomorphism::ToralAutomorphism(IntMatrix m, double hyperbolicity_tol)
    : m_(std::move(m)) {
    if (m_.rows() != m_.cols() || m_.rows() < 1)
        throw Error("ToralAutomorphism: matrix must be square");
    long long det = int_det(m_);
    if (det != 1 && det != -1) throw Error("ToralAutomorphism: |det| must be 1");
    Eigen::EigenSolver<Matrix> es(matrix_d());
    for (int i = 0; i < m_.rows(); ++i) {
        if (std::abs(std::abs(es.eigenvalues()(i)) - 1.0) < hyperbolicity_tol)
            throw Error("ToralAutomorphism: eigenvalue of modulus 1 (not hyperbolic)");
    }
}

Matrix ToralAutomorphism::matrix_d() const {
    Matrix out(m_.rows(), m_.cols());
    for (int i = 0; i < m_.rows(); ++i)
        for (int j = 0; j < m_.cols(); ++j) out(i, j) = double(m_(i, j));
    return out;
}

Vector ToralAutomorphism::apply(const Vector& x) const {
    Vector y = matrix_d() * x;
    for (int i = 0; i < y.size(); ++i) y(i) -= std::floor(y(i));
    return y;
}

RationalVec ToralAutomorphism::apply(const RationalVec& x) const {
    const int d = dimension();
    RationalVec y(static_cast<size_t>(d));
    for (int i = 0; i < d; ++i) {
        Rational acc(0);
        for (int j = 0; j < d; ++j) acc = acc + Rational(m_(i, j)) * x[size_t(j)];
        y[size_t(i)] = acc.frac();
    }
    return y;
}

IntMatrix ToralAutomorphism::power(int n) const {
    const int d = dimension();
    IntMatrix acc = IntMatrix::Identity(d, d);
    for (int s = 0; s < n; ++s) {
        IntMatrix next = IntMatrix::Zero(d, d);
        for (int i = 0; i < d; ++i)
            for (int k = 0; k < d; ++k)
                if (acc(i, k) != 0)
                    for (int j = 0; j < d; ++j)
                        next(i, j) = checked_ll(int128(next(i, j)) +
                                                int128(acc(i, k)) * m_(k, j),
                                                "ToralAutomorphism::power");
        acc = next;
    }
    return acc;
}

long long ToralAutomorphism::fixed_point_count(int n) const {
    IntMatrix s = power(n) - IntMatrix::Identity(dimension(), dimension());
    return std::llabs(int_det(s));
}

std::vector<RationalVec> ToralAutomorphism::fixed_points(int n, long long cap) const {
    const int d = dimension();
    long long count = fixed_point_count(n);
    if (count > cap) throw CapacityExceeded("torus fixed_points above cap");
    IntMatrix s = power(n) - IntMatrix::Identity(d, d);
    IntMatrix u, diag, v;
    smith_normal_form(s, u, diag, v);
    // S x in Z^d  <=>  D (V^{-1} x) in Z^d with x = V w, w_i = k_i / D_ii
    std::vector<RationalVec> out;
    out.reserve(size_t(count));
    std::vector<long long> k(size_t(d), 0);
    while (true) {
        RationalVec x(static_cast<size_t>(d));
        for (int i = 0; i < d; ++i) {
            Rational acc(0);
            for (int j = 0; j < d; ++j)
                acc = acc + Rational(v(i, j)) * Rational(k[size_t(j)], diag(j, j));
            x[size_t(i)] = acc.frac();
        }
        out.push_back(std::move(x));
        int pos = 0;
        while (pos < d) {
            if (++k[size_t(pos)] < diag(pos, pos)) break;
            k[size_t(pos)] = 0;
            ++pos;
        }
        if (pos == d) break;
    }
    std::sort(out.begin(), out.end(), [](const RationalVec& a, const RationalVec& b) {
        for (size_t i = 0; i < a.size(); ++i) {
            if (a[i] < b[i]) return true;
            if (b[i] < a[i]) return false;
        }
        return false;
    });
    return out;
}

WeakIrreducibilityReport ToralAutomorphism::weak_irreducibility(double tol) const {
    WeakIrreducibilityReport rep;
    rep.factors = factor_monic(char_poly(m_));
    std::sort(rep.factors.begin(), rep.factors.end());
    for (const auto& f : rep.factors) rep.moduli_sets.push_back(root_moduli(f, tol));
    rep.weakly_irreducible = true;
    for (size_t i = 1; i < rep.moduli_sets.size(); ++i) {
        const auto& a = rep.moduli_sets[0];
        const auto& b = rep.moduli_sets[i];
        if (a.size() != b.size()) { rep.weakly_irreducible = false; break; }
        for (size_t j = 0; j < a.size(); ++j)
            if (std::abs(a[j] - b[j]) > tol) { rep.weakly_irreducible = false; break; }
        if (!rep.weakly_irreducible) break;
    }
    return rep;
}

void ToralAutomorphism::stable_unstable(Matrix& stable, Matrix& unstable) const {
    Eigen::RealSchur<Matrix> schur(matrix_d());
    // group eigenvalues by modulus via ordered real Schur is overkill here;
    // use the eigenvector route with realification
    Eigen::EigenSolver<Matrix> es(matrix_d());
    const int d = dimension();
    std::vector<Vector> sv, uv;
    for (int i = 0; i < d; ++i) {
        std::complex<double> lam = es.eigenvalues()(i);
        Eigen::VectorXcd vec = es.eigenvectors().col(i);
        bool is_stable = std::abs(lam) < 1.0;
        if (std::abs(lam.imag()) < 1e-12) {
            Vector rv = vec.real();
            (is_stable ? sv : uv).push_back(rv);
        } else if (lam.imag() > 0) {  // one representative per conjugate pair
            (is_stable ? sv : uv).push_back(vec.real());
            (is_stable ? sv : uv).push_back(vec.imag());
        }
    }
    auto orth = [](const std::vector<Vector>& cols) {
        if (cols.empty()) return Matrix(0, 0);
        Matrix m(cols[0].size(), Eigen::Index(cols.size()));
        for (size_t j = 0; j < cols.size(); ++j) m.col(Eigen::Index(j)) = cols[j];
        Eigen::HouseholderQR<Matrix> qr(m);
        Matrix q = qr.householderQ() * Matrix::Identity(m.rows(), m.cols());
        return q;
    };
    stable = orth(sv);
    unstable = orth(uv);
}

ToralAutomorphism ToralAutomorphism::cat_map() {
    IntMatrix m(2, 2);
    m << 2, 1, 1, 1;
    return ToralAutomorphism(std::move(m));
}

std::vector<TorusPeriodicOrbit> torus_periodic_orbits(const ToralAutomorphism& l,
                                                      int n_max, long long cap) {
    std::vector<TorusPeriodicOrbit> orbits;
    for (int n = 1; n <= n_max; ++n) {
        auto pts = l.fixed_points(n, cap);
        for (const auto& p : pts) {
            // minimal period check by divisor
            bool minimal = true;
            for (int d = 1; d < n && minimal; ++d) {
                if (n % d != 0) continue;
                RationalVec q = p;
                for (int s = 0; s < d; ++s) q = l.apply(q);
                if (q == p) minimal = false;
            }
            if (!minimal) continue;
            // canonical representative: smallest point on the orbit
            RationalVec best = p, cur = p;
            for (int s = 1; s < n; ++s) {
                cur = l.apply(cur);
                if (std::lexicographical_compare(cur.begin(), cur.end(), best.begin(),
                                                 best.end(),
                                                 [](const Rational& a, const Rational& b) {
                                                     return a < b;
                                                 }))
                    best = cur;
            }
            if (best == p) orbits.push_back({p, n});
        }
    }
    return orbits;
}

double torus_distance(const Vector& a, const Vector& b) {
    double m = 0.0;
    for (int i = 0; i < a.size(); ++i) {
        double d = std::abs(a(i) - b(i));
        d = std::min(d, 1.0 - d);
        m = std::max(m, d);
    }
    return m;
}

Vector linear_local_product(const ToralAutomorphism& l, const Vector& x, const Vector& z,
                            double radius) {
    if (torus_distance(x, z) > radius)
        throw NotInProductRange("linear_local_product: points too far apart");
    Matrix es, eu;
    l.stable_unstable(es, eu);
    const int d = l.dimension();
    if (es.cols() + eu.cols() != d)
        throw Error("linear_local_product: splitting does not span");
    // w = x + Es a = z + Eu b (closest lift of z to x)
    Vector zl = z;
    for (int i = 0; i < d; ++i) {
        double diff = zl(i) - x(i);
        zl(i) -= std::round(diff);
    }
    Matrix sys(d, d);
    sys.leftCols(es.cols()) = es;
    sys.rightCols(eu.cols()) = -eu;
    Vector rhs = zl - x;
    Vector ab = sys.fullPivLu().solve(rhs);
    Vector w = x + es * ab.head(es.cols());
    for (int i = 0; i < d; ++i) w(i) -= std::floor(w(i));
    return w;
}

TorusClosingResult torus_anosov_closing(const ToralAutomorphism& l, const RationalVec& x,
                                        int n, double threshold) {
    const int d = l.dimension();
    RationalVec fnx = x;
    for (int s = 0; s < n; ++s) fnx = l.apply(fnx);
    Vector xv(d), fv(d);
    for (int i = 0; i < d; ++i) {
        xv(i) = x[size_t(i)].to_double();
        fv(i) = fnx[size_t(i)].to_double();
    }
    double gap = torus_distance(xv, fv);
    if (gap > threshold)
        throw NotCloseEnough("torus_anosov_closing: segment does not nearly close");

    // solve (L^n - I) p = m exactly, m the integer vector with p nearest x
    IntMatrix s = l.power(n) - IntMatrix::Identity(d, d);
    // m = round((L^n - I) x): exact rational evaluation, nearest integer
    RationalVec sx(static_cast<size_t>(d));
    for (int i = 0; i < d; ++i) {
        Rational acc(0);
        for (int j = 0; j < d; ++j) acc = acc + Rational(s(i, j)) * x[size_t(j)];
        sx[size_t(i)] = acc;
    }
    IntMatrix srat = s;  // solve via adjugate: p = adj(S) m / det(S)
    long long det = int_det(srat);
    if (det == 0) throw Error("torus_anosov_closing: L^n - I singular");
    std::vector<long long> m(static_cast<size_t>(d));
    for (int i = 0; i < d; ++i) {
        // exact nearest integer: floor(v + 1/2)
        const Rational& v = sx[size_t(i)];
        long long twice = checked_ll(__int128(2) * v.num + v.den, "closing round");
        long long q = twice / (2 * v.den);
        if (twice < 0 && twice % (2 * v.den) != 0) --q;
        m[size_t(i)] = q;
    }

    // adjugate
    IntMatrix adj(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            IntMatrix minor(d - 1, d - 1);
            for (int r = 0, rr = 0; r < d; ++r) {
                if (r == i) continue;
                for (int c = 0, cc = 0; c < d; ++c) {
                    if (c == j) continue;
                    minor(rr, cc++) = srat(r, c);
                }
                ++rr;
            }
            adj(j, i) = ((i + j) % 2 == 0 ? 1 : -1) * (d > 1 ? int_det(minor) : 1);
        }
    RationalVec p(static_cast<size_t>(d));
    for (int i = 0; i < d; ++i) {
        __int128 acc = 0;
        for (int j = 0; j < d; ++j) acc += __int128(adj(i, j)) * m[size_t(j)];
        p[size_t(i)] = Rational(checked_ll(acc, "torus_anosov_closing"), det).frac();
    }

    TorusClosingResult r;
    r.point = p;
    r.input_gap = gap;
    // minimal period
    r.period = n;
    for (int dd = 1; dd < n; ++dd) {
        if (n % dd != 0) continue;
        RationalVec q = p;
        for (int ss = 0; ss < dd; ++ss) q = l.apply(q);
        if (q == p) { r.period = dd; break; }
    }
    // shadowing bound over the segment
    RationalVec xi = x, pi = p;
    double bound = 0.0;
    for (int i = 0; i <= n; ++i) {
        Vector a(d), b(d);
        for (int j = 0; j < d; ++j) {
            a(j) = xi[size_t(j)].to_double();
            b(j) = pi[size_t(j)].to_double();
        }
        bound = std::max(bound, torus_distance(a, b));
        xi = l.apply(xi);
        pi = l.apply(pi);
    }
    r.shadowing_bound = bound;
    r.k1 = (gap > 0) ? bound / gap : 0.0;
    return r;
}

// ---------------------------------------------------------------------------

Vector TorusMap::apply(const Vector& x) const {
    Vector y = linear_part().matrix_d() * x + displacement(x);
    for (int i = 0; i < y.size(); ++i) y(i) -= std::floor(y(i));
    return y;
}

Vector TorusMap::apply_inverse(const Vector& y) const {
    // solve L x + P(x) = y (mod 1): x = L^{-1}(y - P(x)), contraction for
    // C^1-small P
    const Matrix linv = linear_part().matrix_d().inverse();
    Vector x = linv * y;
    for (int i = 0; i < x.size(); ++i) x(i) -= std::floor(x(i));
    for (int it = 0; it < 200; ++it) {
        // lift y near L x + P(x)
        Vector target = linear_part().matrix_d() * x + displacement(x);
        Vector shift = y - target;
        for (int i = 0; i < shift.size(); ++i) shift(i) -= std::round(shift(i));
        Vector xn = x + linv * shift;
        for (int i = 0; i < xn.size(); ++i) xn(i) -= std::floor(xn(i));
        double step = torus_distance(x, xn);
        x = xn;
        if (step < 1e-15) break;
    }
    return x;
}

Vector TorusMap::iterate(const Vector& x, int n) const {
    Vector y = x;
    if (n >= 0)
        for (int i = 0; i < n; ++i) y = apply(y);
    else
        for (int i = 0; i < -n; ++i) y = apply_inverse(y);
    return y;
}

PerturbedToralMap::PerturbedToralMap(ToralAutomorphism l, std::vector<TrigTerm> terms)
    : linear_(std::move(l)), terms_(std::move(terms)) {
    for (const auto& t : terms_) {
        if (t.frequency.size() != dimension() || t.direction.size() != dimension())
            throw Error("PerturbedToralMap: term dimension mismatch");
    }
}

Vector PerturbedToralMap::displacement(const Vector& x) const {
    Vector p = Vector::Zero(dimension());
    for (const auto& t : terms_) {
        double phase = kTwoPi * t.frequency.cast<double>().dot(x);
        double val = t.use_sin ? std::sin(phase) : std::cos(phase);
        p += t.amplitude * val * t.direction;
    }
    return p;
}

Matrix PerturbedToralMap::derivative(const Vector& x) const {
    Matrix d = linear_.matrix_d();
    for (const auto& t : terms_) {
        double phase = kTwoPi * t.frequency.cast<double>().dot(x);
        double dval = t.use_sin ? std::cos(phase) : -std::sin(phase);
        d += (t.amplitude * dval * kTwoPi) * t.direction *
             t.frequency.cast<double>().transpose();
    }
    return d;
}

double PerturbedToralMap::derivative_bound() const {
    double b = 0.0;
    for (const auto& t : terms_)
        b += std::abs(t.amplitude) * kTwoPi * t.direction.norm() *
             t.frequency.cast<double>().norm();
    return b;
}

ConjugatedToralMap::ConjugatedToralMap(ToralAutomorphism l, std::vector<TrigTerm> tau)
    : linear_(std::move(l)), tau_(std::move(tau)) {}

Vector ConjugatedToralMap::tau_eval(const Vector& y) const {
    Vector p = Vector::Zero(dimension());
    for (const auto& t : tau_) {
        double phase = kTwoPi * t.frequency.cast<double>().dot(y);
        double val = t.use_sin ? std::sin(phase) : std::cos(phase);
        p += t.amplitude * val * t.direction;
    }
    return p;
}

Matrix ConjugatedToralMap::tau_derivative(const Vector& y) const {
    Matrix d = Matrix::Zero(dimension(), dimension());
    for (const auto& t : tau_) {
        double phase = kTwoPi * t.frequency.cast<double>().dot(y);
        double dval = t.use_sin ? std::cos(phase) : -std::sin(phase);
        d += (t.amplitude * dval * kTwoPi) * t.direction *
             t.frequency.cast<double>().transpose();
    }
    return d;
}

Vector ConjugatedToralMap::t_forward(const Vector& y) const {
    Vector x = y + tau_eval(y);
    for (int i = 0; i < x.size(); ++i) x(i) -= std::floor(x(i));
    return x;
}

Vector ConjugatedToralMap::t_inverse(const Vector& x) const {
    Vector y = x;
    for (int it = 0; it < 200; ++it) {
        Vector diff = x - (y + tau_eval(y));
        for (int i = 0; i < diff.size(); ++i) diff(i) -= std::round(diff(i));
        Vector yn = y + diff;
        for (int i = 0; i < yn.size(); ++i) yn(i) -= std::floor(yn(i));
        double step = torus_distance(y, yn);
        y = yn;
        if (step < 1e-15) break;
    }
    return y;
}

Matrix ConjugatedToralMap::t_derivative(const Vector& y) const {
    return Matrix::Identity(dimension(), dimension()) + tau_derivative(y);
}

Vector ConjugatedToralMap::displacement(const Vector& x) const {
    // P(x) = tau(L y) - L tau(y) with y = T^{-1}(x); periodic in x
    Vector y = t_inverse(x);
    Vector ly = linear_.matrix_d() * y;
    return tau_eval(ly) - linear_.matrix_d() * tau_eval(y);
}

Matrix ConjugatedToralMap::derivative(const Vector& x) const {
    Vector y = t_inverse(x);
    Vector ly = linear_.apply(y);
    return t_derivative(ly) * linear_.matrix_d() * t_derivative(y).inverse();
}

} // namespace coho
