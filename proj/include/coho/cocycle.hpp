// Linear cocycles over hyperbolic bases: iterates with renormalized long
// products, periodic data, canonical conjugator search, delta-narrow
// spectrum radius, fiber bunching certificates, quasiconformal distortion.
#pragma once

#include <complex>
#include <functional>
#include <optional>
#include <vector>

#include "coho/linalg.hpp"
#include "coho/sft.hpp"
#include "coho/torus.hpp"

namespace coho {

/// GL(d,R) cocycle over a mixing SFT.  The generator is either a constant
/// matrix or a locally-constant table over symbol windows [win_lo, win_hi].
class SymbolicCocycle {
public:
    using Point = SymbolicPoint;

    static SymbolicCocycle constant(SftBase base, Matrix value,
                                    double hoelder_exponent = 1.0);
    static SymbolicCocycle locally_constant(SftBase base, int win_lo, int win_hi,
                                            std::vector<Matrix> table,
                                            double hoelder_exponent = 1.0);
    /// Builds the full window table by evaluating fn on every word.
    static SymbolicCocycle from_window_fn(
        SftBase base, int win_lo, int win_hi, int dimension,
        const std::function<Matrix(const std::vector<int>&)>& fn,
        double hoelder_exponent = 1.0);

    int dimension() const { return dim_; }
    const SftBase& base() const { return base_; }
    double hoelder_exponent() const { return hoelder_; }
    bool is_constant() const { return table_.size() == 1 && win_lo_ == 0 && win_hi_ < 0; }
    int window_lo() const { return win_lo_; }
    int window_hi() const { return win_hi_; }

    Matrix generator(const SymbolicPoint& x) const;
    SymbolicPoint step(const SymbolicPoint& x, long n = 1) const { return x.shifted(n); }

    /// A^n_x for n in Z; A^0 = Id.  Throws IllConditioned above cond_cap.
    Matrix iterate(const SymbolicPoint& x, long n, double cond_cap = 1e12) const;
    ScaledMatrix iterate_scaled(const SymbolicPoint& x, long n) const;

    /// Constant conjugation x -> C^{-1} A_x C.
    SymbolicCocycle conjugated_by(const Matrix& c) const;

private:
    SymbolicCocycle(SftBase base, int lo, int hi, std::vector<Matrix> table,
                    double hoelder);
    size_t table_index(const std::vector<int>& word) const;

    SftBase base_;
    int win_lo_ = 0, win_hi_ = -1;  // empty window = constant
    std::vector<Matrix> table_;
    int dim_ = 0;
    double hoelder_ = 1.0;
};

/// Derivative cocycle Df of a perturbed toral map on the trivial bundle.
class TorusDerivativeCocycle {
public:
    using Point = Vector;

    explicit TorusDerivativeCocycle(const TorusMap& f) : f_(&f) {}
    int dimension() const { return f_->dimension(); }
    const TorusMap& map() const { return *f_; }

    Matrix generator(const Vector& x) const { return f_->derivative(x); }
    Vector step(const Vector& x, long n = 1) const { return f_->iterate(x, int(n)); }
    Matrix iterate(const Vector& x, long n, double cond_cap = 1e12) const;
    ScaledMatrix iterate_scaled(const Vector& x, long n) const;

private:
    const TorusMap* f_;
};

struct PeriodicDatum {
    Matrix return_matrix;                          // A_p^n
    std::vector<std::complex<double>> eigenvalues; // sorted by (modulus, argument)
    int period = 1;
    double recompute_residual = 0.0;  // relative, ordered-product recheck
};

PeriodicDatum periodic_data(const SymbolicCocycle& a, const PeriodicOrbit& orbit);
PeriodicDatum periodic_data(const TorusDerivativeCocycle& a, const Vector& point,
                            int period);

struct PeriodicConjugator {
    Matrix c;
    double condition_number = 0.0;
    double residual = 0.0;  // ||A - C B C^{-1}|| / ||A||
};

/// Similarity test plus canonical near-minimal-condition conjugator:
/// eigenstructure matching, then balancing over the commutant.
/// Returns nothing when the return matrices are not similar.
std::optional<PeriodicConjugator> match_periodic_conjugator(const PeriodicDatum& da,
                                                            const PeriodicDatum& db,
                                                            double tol = 1e-8);

struct NarrowSpectrumSpec {
    std::vector<double> centers;  // non-increasing
    double delta = 0.0;
};

struct DeltaNarrowReport {
    double delta = 0.0;
    size_t witness_orbit = 0;
    std::vector<double> per_orbit_delta;
};

/// Smallest delta such that every orbit's eigenvalue moduli, sorted-matched
/// against the centers, satisfy e^{n(c_i - delta)} <= |alpha_i| <= e^{n(c_i + delta)}.
DeltaNarrowReport delta_narrow_radius(const SymbolicCocycle& a,
                                      const std::vector<PeriodicOrbit>& orbits,
                                      const std::vector<double>& centers);

struct BunchingCertificate {
    double beta = 1.0;
    int horizon = 0;
    double theta = 1.0;   // fitted rate, valid iff < 1
    double l_const = 1.0; // fitted constant dominating all measured points
    bool valid = false;
    double margin = 0.0;  // 1 - theta
};

/// Measures max over samples of ||A^n|| ||A^{-n}...|| (nu^n)^beta forward and
/// backward, fits (theta, L).
BunchingCertificate bunching_margin(const SymbolicCocycle& a, double beta, int horizon,
                                    const std::vector<SymbolicPoint>& samples);

double qc_distortion(const SymbolicCocycle& a, const SymbolicPoint& x, long n);
double qc_distortion_log(const SymbolicCocycle& a, const SymbolicPoint& x, long n);
double qc_distortion_log(const TorusDerivativeCocycle& a, const Vector& x, long n);

} // namespace coho
