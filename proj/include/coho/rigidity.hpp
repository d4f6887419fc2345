// The toral pipeline: Franks-Manning conjugacy by split geometric series,
// derivative-cocycle checks, nonstationary linearization, foliation
// holonomies with the derivative lemma, and the skew-product demo.
#pragma once

#include "coho/cocycle.hpp"
#include "coho/torus.hpp"

namespace coho {

/// Solves L o h = h o f with h = id + u: the stable component of u by the
/// forward-contracting series, the unstable component backward.  The series
/// is evaluated pointwise, so the functional equation holds at every point,
/// not just on a grid.
class ConjugacyField {
public:
    explicit ConjugacyField(const TorusMap& f, double term_tol = 1e-15,
                            int series_cap = 400);

    Vector displacement(const Vector& x) const;       // u(x), Z^d-periodic
    Vector h(const Vector& x) const;                  // x + u(x) mod 1
    double equation_residual(const Vector& x) const;  // dist(L h(x), h(fx))
    double max_grid_residual(int grid_n, int threads = 1) const;
    int terms_used() const { return terms_; }
    const TorusMap& map() const { return *f_; }

private:
    const TorusMap* f_;
    std::vector<Matrix> stable_ops_;    // L^{k-1} P_s
    std::vector<Matrix> unstable_ops_;  // L^{-(k+1)} P_u
    int terms_ = 0;
};

struct DerivativeTransferReport {
    std::vector<double> steps;
    std::vector<double> identity_residuals;  // ||L Dh(x) - Dh(fx) Df(x)|| max
    std::vector<double> jacobian_updates;    // ||Dh(t_i) - Dh(t_{i-1})|| max
    bool converged = false;                  // updates decreasing to the end
};

/// Central finite-difference Jacobian of h at the samples over a step
/// ladder; non-convergence is a reported outcome.
DerivativeTransferReport derivative_transfer(const ConjugacyField& h,
                                             const std::vector<Vector>& samples,
                                             const std::vector<double>& steps);

/// Arclength-parametrized polyline of a 1-D stable/unstable leaf through x,
/// grown by iterated graph transform in the linear eigenchart.  Points are
/// lifted coordinates (not reduced mod 1).
struct LeafSegment {
    std::vector<Vector> pts;
    std::vector<double> arc;  // signed arclength, 0 at the anchor x
    Vector anchor;

    Vector point_at(double s) const;
    Vector tangent_at(double s) const;
    double arc_min() const { return arc.front(); }
    double arc_max() const { return arc.back(); }
};

LeafSegment grow_leaf(const TorusMap& f, const Vector& x, bool unstable, double radius,
                      int iterations = 30, int grid_points = 4001);

struct RateTriple {
    double nu = 0.0;        // max ||Df|E^s||
    double gamma = 0.0;     // 1 / min ||Df|E^u||
    double gamma_hat = 0.0; // max ||Df|E^u||
};

/// Measured over a deterministic sample sweep.
RateTriple measure_rates(const TorusMap& f, int sweep = 64);

struct BunchingCheck {
    bool holonomy_ok = false;       // gamma_hat * gamma * nu^{beta/(1+beta)} < 1
    bool linearization_ok = false;  // gamma_hat * gamma^{1+beta} < 1
    double holonomy_value = 0.0;
    double linearization_value = 0.0;
};

BunchingCheck bunching_check(const RateTriple& rates, double beta);

struct LinearizationChart {
    Vector base_point;
    double radius = 0.0;
    std::vector<double> leaf_arc;   // sampled leaf coordinate s
    std::vector<double> phi;        // phi_x at those samples
    double derivative_at_zero = 1.0;
    double conjugation_residual = 0.0;  // Df|E phi(z) vs phi(f z)
    int depth = 0;
};

/// phi_x(z) = lim (Df^n|E)^{-1} sigma(f^n z) along a 1-D leaf; uniqueness
/// cross-checked by comparing truncation depths.  Throws BunchingFailed if
/// the rate test fails.
LinearizationChart nonstationary_linearization(const TorusMap& f, const Vector& x,
                                               bool unstable, double radius,
                                               double beta = 0.5, int depth = 24,
                                               int samples = 33);

/// Holonomy of the stable foliation between unstable leaves: for sampled
/// z in W(x), the intersection W^s_loc(z) cap W(y).  Returns matched
/// arclength pairs (s on W(x), s' on W(y)).
struct FoliationHolonomy {
    std::vector<double> source_arc;
    std::vector<double> image_arc;
    double accuracy = 0.0;  // certificate from leaf growth tolerance
};

FoliationHolonomy foliation_holonomy(const TorusMap& f, const Vector& x, const Vector& y,
                                     double radius, int n_samples = 21,
                                     int leaf_grid = 4001);

/// Scalar stable holonomy of the cocycle Df|E^u in unit tangent frames.
double cocycle_holonomy_unstable_line(const TorusMap& f, const Vector& x, const Vector& y,
                                      int depth = 60);

struct DerivativeCheckReport {
    std::vector<double> steps;       // t ladder
    std::vector<double> deviation;   // |FD quotient - cocycle holonomy|
    double cocycle_value = 0.0;
    bool monotone = true;
    double final_deviation = 0.0;
};

/// Finite-difference derivative of the foliation holonomy at x against the
/// cocycle holonomy, over a step ladder.  Gated on the holonomy bunching
/// inequality (throws BunchingFailed); rates_override substitutes measured
/// rates, for exercising the gate.
DerivativeCheckReport holonomy_derivative_check(const TorusMap& f, const Vector& x,
                                                const Vector& y,
                                                const std::vector<double>& steps,
                                                double beta = 0.5,
                                                const RateTriple* rates_override = nullptr);

/// Max |g-length distortion - 1| of a sampled 1-D leaf map, with metric
/// densities supplied along source and image leaves.
double metric_isometry_residual(const std::vector<double>& source_arc,
                                const std::vector<double>& image_arc,
                                const std::function<double(double)>& g_source,
                                const std::function<double(double)>& g_image);

struct T4SkewReport {
    double eps = 0.0;
    int n_max = 0;
    long long points_checked = 0;
    double max_eigenvalue_rel_error = 0.0;
    double max_conjugator_residual = 0.0;
    double max_conjugator_condition = 0.0;
    size_t conjugators_tabulated = 0;
    bool l_weakly_irreducible = true;  // false expected for distinct moduli
};

/// f(x,y) = (Ax + eps sin(2 pi y_1) v, By): periodic spectra of Df^n vs
/// {lambda^n, lambda^{-n}, mu^n, mu^{-n}}, conjugators to L^n tabulated.
T4SkewReport t4_skew_periodic_demo(const IntMatrix& a2, const IntMatrix& b2, double eps,
                                   int n_max, size_t conjugator_subsample = 200,
                                   int threads = 1);

} // namespace coho
