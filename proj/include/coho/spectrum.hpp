// Lyapunov spectra from orthogonalized products, periodic-orbit exponents,
// dominated splittings with measured certificates, and block restriction.
#pragma once

#include <vector>

#include "coho/cocycle.hpp"

namespace coho {

struct LyapunovSpectrum {
    std::vector<double> exponents;   // per-iterate, descending
    std::vector<double> distinct;    // sigma_1 < ... < sigma_l
    std::vector<int> multiplicities; // d_1, ..., d_l (sum = d)
    std::vector<double> moduli;      // rho_i = e^{sigma_i}
    double grouping_tol = 1e-2;
    double log_det_rate = 0.0;       // (1/n) log|det A^n_x|
};

/// QR-orthogonalized product accumulation over n steps.
template <class Cocycle>
LyapunovSpectrum lyapunov_exponents(const Cocycle& a,
                                    const typename Cocycle::Point& x, int n,
                                    double grouping_tol = 1e-2);

/// (1/n) log|eigenvalues of the return matrix|, descending.
std::vector<double> periodic_exponents(const PeriodicDatum& datum);

template <class Point>
struct SplittingFieldT {
    std::vector<Point> points;
    std::vector<Matrix> fast;  // d x k orthonormal frames
    std::vector<Matrix> slow;  // d x (d-k) orthonormal frames
    int index_k = 0;
    int horizon = 0;
    double k_const = 0.0;  // domination ||A^n|F|| < K tau^n m(A^n|G)
    double tau = 1.0;
    double invariance_residual = 0.0;
    bool certified = false;
};

using SymbolicSplittingField = SplittingFieldT<SymbolicPoint>;
using TorusSplittingField = SplittingFieldT<Vector>;

/// Fast space from top-k left singular vectors of the backward window
/// product, slow space from the inverse cocycle symmetrically.  Throws
/// NoDomination when the fitted tau is not < 1 or invariance fails.
template <class Cocycle>
SplittingFieldT<typename Cocycle::Point> dominated_splitting(
    const Cocycle& a, int index_k, const std::vector<typename Cocycle::Point>& samples,
    int horizon, double invariance_tol = 1e-6);

/// Restriction of the generator to the fast (block 0) or slow (block 1)
/// subbundle in the stored frames, along consecutive stored samples.
/// i_from/i_to index the splitting's sample list with points x, f(x).
template <class Cocycle>
Matrix restrict_step(const Cocycle& a, const SplittingFieldT<typename Cocycle::Point>& s,
                     int block, size_t i_from, size_t i_to, double consistency_tol = 1e-8);

/// Block return matrix at a stored periodic sample (A^period preserves the
/// subspace); consistency residual checked against consistency_tol.
template <class Cocycle>
Matrix restrict_return_matrix(const Cocycle& a,
                              const SplittingFieldT<typename Cocycle::Point>& s, int block,
                              size_t sample, int period, double consistency_tol = 1e-8);

struct PeriodicApproxReport {
    std::vector<double> generic_exponents;
    std::vector<std::vector<double>> per_orbit_exponents;
    double gap = 0.0;  // max_i min_orbit |generic_i - periodic_i|
    bool within_tol = false;
    double tol = 5e-3;
};

PeriodicApproxReport periodic_approximation_check(const SymbolicCocycle& a,
                                                  const SymbolicPoint& x, int n,
                                                  const std::vector<PeriodicOrbit>& orbits,
                                                  double tol = 5e-3);

} // namespace coho
