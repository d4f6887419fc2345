// Stable/unstable cocycle holonomies as certified truncated limits, with
// equivariance and Hölder diagnostics.
#pragma once

#include "coho/cocycle.hpp"

namespace coho {

struct HolonomyOperator {
    Matrix h;
    bool stable = true;
    SymbolicPoint source, target;  // H : fiber(source) -> fiber(target)
    long depth = 0;                // truncation depth actually used
    double error_bound = 0.0;      // certified tail bound
    double leaf_distance = 0.0;
    long locality_offset = 0;      // iterations needed to reach the local leaf
};

/// Smallest N >= 0 with x_i = y_i for all i >= N, if y is on the stable
/// leaf of x; nothing otherwise.
std::optional<long> stable_leaf_offset(const SymbolicPoint& x, const SymbolicPoint& y);
/// Mirror: agreement for all i <= -N.
std::optional<long> unstable_leaf_offset(const SymbolicPoint& x, const SymbolicPoint& y);

/// H^s_{x,y} = lim (A^n_y)^{-1} A^n_x, truncated so the certified tail
/// bound is below tol.  Non-local stable pairs are handled by iterating
/// into the local leaf (the limit formula is unchanged).
HolonomyOperator stable_holonomy(const SymbolicCocycle& a, const SymbolicPoint& x,
                                 const SymbolicPoint& y, const BunchingCertificate& cert,
                                 double tol = 1e-10);

HolonomyOperator unstable_holonomy(const SymbolicCocycle& a, const SymbolicPoint& x,
                                   const SymbolicPoint& y, const BunchingCertificate& cert,
                                   double tol = 1e-10);

/// Raw truncation (A^n_y)^{-1} A^n_x without certificate-driven depth
/// selection; used for truncation-convergence diagnostics.
Matrix stable_holonomy_truncated(const SymbolicCocycle& a, const SymbolicPoint& x,
                                 const SymbolicPoint& y, long n);
Matrix unstable_holonomy_truncated(const SymbolicCocycle& a, const SymbolicPoint& x,
                                   const SymbolicPoint& y, long n);

/// Residual of A_x = H_{fy,fx} o A_y o H_{x,y} with the holonomies at
/// (fx, fy) recomputed at the same tolerance.
double equivariance_residual(const SymbolicCocycle& a, const HolonomyOperator& h,
                             const BunchingCertificate& cert, double tol = 1e-10);

struct HolderFit {
    double beta = 0.0;
    double k_const = 0.0;
    double fit_residual = 0.0;  // rms residual of the log-log regression
    bool degenerate = false;    // all norms at zero
};

/// Log-log regression of ||H - Id|| against leaf distance.
/// Requires >= 8 pairs spanning >= 2 decades of distance.
HolderFit holder_fit(const std::vector<std::pair<double, double>>& pairs);

} // namespace coho
