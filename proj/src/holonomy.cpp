#include "coho/holonomy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace coho {

namespace {

long lcm_long(long a, long b) { return a / std::gcd(a, b) * b; }

// agreement horizon: both tails are periodic beyond this index
long tail_start(const SymbolicPoint& x, const SymbolicPoint& y, bool future) {
    if (future) {
        long n0 = std::max({x.core_hi() + 1, y.core_hi() + 1, 0L});
        return n0;
    }
    return std::min({x.core_lo() - 1, y.core_lo() - 1, 0L});
}

} // namespace

std::optional<long> stable_leaf_offset(const SymbolicPoint& x, const SymbolicPoint& y) {
    long n0 = tail_start(x, y, true);
    long l = lcm_long(long(x.future_word().size()), long(y.future_word().size()));
    for (long i = n0; i < n0 + l; ++i)
        if (x.at(i) != y.at(i)) return std::nullopt;
    long n = n0;
    while (n > 0 && x.at(n - 1) == y.at(n - 1)) --n;
    return n;
}

std::optional<long> unstable_leaf_offset(const SymbolicPoint& x, const SymbolicPoint& y) {
    long n0 = tail_start(x, y, false);
    long l = lcm_long(long(x.past_word().size()), long(y.past_word().size()));
    for (long i = n0; i > n0 - l; --i)
        if (x.at(i) != y.at(i)) return std::nullopt;
    long n = -n0;
    while (n > 0 && x.at(-(n - 1)) == y.at(-(n - 1))) --n;
    return n;
}

namespace {

HolonomyOperator holonomy_impl(const SymbolicCocycle& a, const SymbolicPoint& x,
                               const SymbolicPoint& y, const BunchingCertificate& cert,
                               double tol, bool stable) {
    if (!cert.valid)
        throw NoBunchingCertificate("holonomy: bunching certificate not valid");
    auto offset = stable ? stable_leaf_offset(x, y) : unstable_leaf_offset(x, y);
    if (!offset) {
        if (stable) throw NotOnStableLeaf("stable_holonomy: y not on W^s(x)");
        throw NotOnUnstableLeaf("unstable_holonomy: y not on W^u(x)");
    }
    const long n_loc = *offset;

    HolonomyOperator out;
    out.stable = stable;
    out.source = x;
    out.target = y;
    out.locality_offset = n_loc;
    out.leaf_distance = (x == y) ? 0.0 : sft_distance(x, y, a.base());
    if (x == y) {
        out.h = Matrix::Identity(a.dimension(), a.dimension());
        out.depth = 0;
        out.error_bound = 0.0;
        return out;
    }

    // distance after iterating into the local leaf
    SymbolicPoint xl = x.shifted(stable ? n_loc : -n_loc);
    SymbolicPoint yl = y.shifted(stable ? n_loc : -n_loc);
    double d_loc = (xl == yl) ? 0.0 : sft_distance(xl, yl, a.base());

    long n_tail = 1;
    if (d_loc > 0.0) {
        double target = tol / (cert.l_const * std::pow(d_loc, cert.beta));
        if (target < 1.0)
            n_tail = long(std::ceil(std::log(target) / std::log(cert.theta)));
        n_tail = std::clamp(n_tail, 1L, 400L);
    }
    long n = n_loc + n_tail;
    // locally constant generators converge exactly at a finite depth
    bool exact_cutoff = false;
    if (!a.is_constant()) {
        long exact = stable ? std::max(1L, n_loc - a.window_lo())
                            : std::max(1L, n_loc + a.window_hi());
        if (exact <= n) {
            n = exact;
            exact_cutoff = true;
        }
    } else {
        n = 1;  // constant cocycles have trivial holonomies
        exact_cutoff = true;
    }

    ScaledMatrix px = a.iterate_scaled(x, stable ? n : -n);
    ScaledMatrix py = a.iterate_scaled(y, stable ? n : -n);
    out.h = std::exp(px.log_scale - py.log_scale) *
            py.m.fullPivLu().solve(px.m).eval();
    out.depth = n;

    // certified tail bound, inflated by the localization distortion
    double kappa = 1.0;
    if (n_loc > 0) {
        ScaledMatrix loc = a.iterate_scaled(x, stable ? n_loc : -n_loc);
        kappa = std::exp(loc.log_op_norm() - loc.log_conorm());
    }
    long tail_used = std::max(1L, n - n_loc);
    out.error_bound = exact_cutoff
                          ? 0.0  // all further factors cancel identically
                          : cert.l_const * std::pow(cert.theta, double(tail_used)) *
                                std::pow(std::max(d_loc, 0.0), cert.beta) * kappa;
    return out;
}

} // namespace

HolonomyOperator stable_holonomy(const SymbolicCocycle& a, const SymbolicPoint& x,
                                 const SymbolicPoint& y, const BunchingCertificate& cert,
                                 double tol) {
    return holonomy_impl(a, x, y, cert, tol, true);
}

HolonomyOperator unstable_holonomy(const SymbolicCocycle& a, const SymbolicPoint& x,
                                   const SymbolicPoint& y, const BunchingCertificate& cert,
                                   double tol) {
    return holonomy_impl(a, x, y, cert, tol, false);
}

Matrix stable_holonomy_truncated(const SymbolicCocycle& a, const SymbolicPoint& x,
                                 const SymbolicPoint& y, long n) {
    ScaledMatrix px = a.iterate_scaled(x, n);
    ScaledMatrix py = a.iterate_scaled(y, n);
    return std::exp(px.log_scale - py.log_scale) * py.m.fullPivLu().solve(px.m).eval();
}

Matrix unstable_holonomy_truncated(const SymbolicCocycle& a, const SymbolicPoint& x,
                                   const SymbolicPoint& y, long n) {
    ScaledMatrix px = a.iterate_scaled(x, -n);
    ScaledMatrix py = a.iterate_scaled(y, -n);
    return std::exp(px.log_scale - py.log_scale) * py.m.fullPivLu().solve(px.m).eval();
}

double equivariance_residual(const SymbolicCocycle& a, const HolonomyOperator& h,
                             const BunchingCertificate& cert, double tol) {
    SymbolicPoint fx = h.source.shifted(), fy = h.target.shifted();
    HolonomyOperator hf = h.stable ? stable_holonomy(a, fy, fx, cert, tol)
                                   : unstable_holonomy(a, fy, fx, cert, tol);
    Matrix lhs = a.generator(h.source);
    Matrix rhs = hf.h * a.generator(h.target) * h.h;
    return op_norm(lhs - rhs);
}

HolderFit holder_fit(const std::vector<std::pair<double, double>>& pairs) {
    if (pairs.size() < 8)
        throw InsufficientSpread("holder_fit: need at least 8 pairs");
    HolderFit fit;
    std::vector<double> lx, ly;
    double dmin = std::numeric_limits<double>::infinity(), dmax = 0.0;
    for (const auto& [dist, norm] : pairs) {
        if (dist <= 0.0) continue;
        dmin = std::min(dmin, dist);
        dmax = std::max(dmax, dist);
        if (norm > 0.0) {
            lx.push_back(std::log(dist));
            ly.push_back(std::log(norm));
        }
    }
    if (dmax / dmin < 100.0)
        throw InsufficientSpread("holder_fit: distances span less than 2 decades");
    if (lx.size() < 4) {
        fit.degenerate = true;
        return fit;
    }
    auto [slope, intercept] = fit_line(lx, ly);
    fit.beta = slope;
    fit.k_const = std::exp(intercept);
    double ss = 0.0;
    for (size_t i = 0; i < lx.size(); ++i) {
        double r = ly[i] - (slope * lx[i] + intercept);
        ss += r * r;
    }
    fit.fit_residual = std::sqrt(ss / double(lx.size()));
    return fit;
}

} // namespace coho
