// Construction and certification of conjugacies between cocycles: the
// fixed-point/homoclinic transfer-map build, isometrizing metrics, the
// scalar Livšic solver, coprime-power combination and the unipotent
// periodic criterion.
#pragma once

#include <map>

#include "coho/holonomy.hpp"
#include "coho/spectrum.hpp"

namespace coho {

/// Inner product making a diagonalizable B act as rho_i times an isometry
/// on each Lyapunov block: G = P^{-T} P^{-1} for the realified eigenframe P.
struct IsometrizingMetric {
    Matrix frame;       // P
    Matrix frame_inv;   // P^{-1}
    Matrix gram;        // G
    std::vector<double> moduli;     // rho per Lyapunov block, descending
    std::vector<int> block_dims;    // matching dimensions
    double rho = 1.0;               // common modulus when there is one block

    /// Operator norm of M measured in the G inner product.
    double op_norm_g(const Matrix& m) const { return op_norm(frame_inv * m * frame); }
};

/// Throws NotDiagonalizable when B has a nontrivial Jordan block
/// (within jordan_tol).
IsometrizingMetric isometrizing_inner_product(const Matrix& b, double jordan_tol = 1e-9);

/// Times n <= n_max with ||B^n - Id||_G < tol; at least 3 or
/// NoRecurrenceFound.
std::vector<int> recurrence_times(const Matrix& b, const IsometrizingMetric& metric,
                                  int n_max, double tol);

struct LivsicSolution {
    int depth = 2;                  // cylinder window [-depth, depth]
    double rho = 1.0;
    std::vector<double> phi;        // per window word (positional index)
    std::vector<int> word_base;     // alphabet size for indexing
    double obstruction = 0.0;       // max relative periodic-product deviation
    double residual = 0.0;          // max |a phi / (rho phi o f) - 1| over the orbit
    int alphabet = 2;

    double value_at(const SymbolicPoint& x) const;
};

/// Solves a(x) = rho * phi(fx) / phi(x) by telescoping along a
/// cylinder-covering periodic orbit.  Throws PeriodicObstruction when some
/// orbit product deviates from rho^n beyond obstruction_tol.
LivsicSolution scalar_livsic(const SftBase& base,
                             const std::function<double(const SymbolicPoint&)>& a,
                             double rho, int depth, int obstruction_n_max,
                             double obstruction_tol = 1e-6);

/// A'_x = C_q^{-1} A_x C_q after checking C_q^{-1} A_q C_q = B.
SymbolicCocycle normalize_at_fixed_point(const SymbolicCocycle& a, const SymbolicPoint& q,
                                         const Matrix& c_q, const Matrix& b,
                                         double tol = 1e-8);

/// Sampled conjugacy with a Hölder certificate.  Values are stored at all
/// homoclinic points of the build depth; other points are served by symbol
/// truncation to the window padded with q.
class TransferMap {
public:
    TransferMap() = default;

    const SymbolicPoint& anchor() const { return q_; }
    int depth() const { return depth_; }
    double beta() const { return beta_; }
    double holder_constant() const { return holder_const_; }  // 2 M K'
    double certificate_residual() const { return cert_residual_; }
    double worst_consistency() const { return worst_consistency_; }
    size_t size() const { return points_.size(); }
    const std::vector<SymbolicPoint>& points() const { return points_; }
    const std::vector<Matrix>& values() const { return values_; }

    /// Exact stored value, or the value at the nearest homoclinic point
    /// (symbols outside [-depth, depth] replaced by q).
    Matrix value_at(const SymbolicPoint& x) const;

    friend TransferMap build_transfer_fixed_point(const SymbolicCocycle&, const Matrix&,
                                                  const SymbolicPoint&, int,
                                                  const BunchingCertificate&, double,
                                                  double, size_t);

    // serialization hooks used by textio
    void set_fields(SymbolicPoint q, int depth, double beta, double holder_const,
                    std::vector<SymbolicPoint> pts, std::vector<Matrix> vals);

private:
    SymbolicPoint q_;
    int depth_ = 0;
    double beta_ = 1.0;
    double holder_const_ = 0.0;
    double cert_residual_ = 0.0;      // max over checked pairs of excess ratio
    double worst_consistency_ = 0.0;  // max ||H^s_{x,q} H^u_{q,x} - Id||
    std::vector<SymbolicPoint> points_;
    std::vector<Matrix> values_;
    std::vector<size_t> word_index_;  // positional word -> index lookup
    int alphabet_ = 2;
    size_t index_of_word(const std::vector<int>& w) const;
    void rebuild_index();
};

/// C(x) = H^s_{q,x} on the homoclinic set of q, with the homoclinic
/// identity checked at every point (throws HomoclinicInconsistency above
/// consistency_tol) and the Hölder certificate attached.
/// Requires A already normalized so that A_q = B.
TransferMap build_transfer_fixed_point(const SymbolicCocycle& a, const Matrix& b,
                                       const SymbolicPoint& q, int depth,
                                       const BunchingCertificate& cert,
                                       double consistency_tol = 1e-6,
                                       double holonomy_tol = 1e-10,
                                       size_t max_pair_checks = 2000);

struct HomoclinicConsistencyReport {
    int n_k = 0;                    // recurrence time used
    double value = 0.0;             // ||A^{2n_k} at f^{-n_k} x - Id||
    double closing_orbit_value = 0.0;  // same quantity along the closed orbit
    PeriodicOrbit closing_orbit;
};

/// The quantity the fixed-point argument drives to zero, evaluated at the
/// largest usable recurrence time.
HomoclinicConsistencyReport homoclinic_consistency(const SymbolicCocycle& a,
                                                   const SymbolicPoint& x,
                                                   const SymbolicPoint& q,
                                                   const std::vector<int>& times);

/// max over samples of ||A_x - C(fx) B_x C(x)^{-1}|| / ||A_x||.
double verify_conjugacy(const SymbolicCocycle& a, const SymbolicCocycle& b,
                        const std::function<Matrix(const SymbolicPoint&)>& c,
                        const std::vector<SymbolicPoint>& samples);

struct MetricField {
    std::vector<SymbolicPoint> points;
    std::vector<Matrix> gram;               // g_x = C(x)^{-T} C(x)^{-1}
    double a_isometry_residual = 0.0;       // target cocycle vs g
    double holonomy_isometry_residual = 0.0;  // u-holonomy g-distortion - 1
};

MetricField invariant_metric_from_transfer(
    const SymbolicCocycle& a, const std::function<Matrix(const SymbolicPoint&)>& c,
    const std::vector<SymbolicPoint>& samples, const BunchingCertificate& cert,
    const Matrix& b_frame);

struct CoprimeCombineReport {
    int n = 1, m = 1, k = 1;
    long long r = 0, s = 0;            // Bezout: NM r + K s = 1
    double period1_residual = 0.0;     // C2 as a conjugacy over f itself
    double centralizer_residual = 0.0; // C1 C2^{-1} in Z(B^{NM})
    bool combined = false;
};

/// Verifies that the f^K conjugacy C2 also conjugates the cocycles over f,
/// reporting Bezout coefficients and the centralizer membership of C1 C2^{-1}.
/// Throws NotCoprime if gcd(NM, K) != 1 and CombineFailed when the period-1
/// residual exceeds tol.
CoprimeCombineReport combine_coprime(const SymbolicCocycle& a, const Matrix& b, int n,
                                     int m, int k,
                                     const std::function<Matrix(const SymbolicPoint&)>& c1,
                                     const std::function<Matrix(const SymbolicPoint&)>& c2,
                                     const std::vector<SymbolicPoint>& samples,
                                     double tol = 1e-8);

/// Upper-triangular pair A = [[1, alpha(x)],[0,1]] vs B = [[1, beta],[0,1]].
struct UnipotentFamily {
    SftBase base;
    int win_lo = 0, win_hi = 0;
    std::vector<double> alpha_table;  // positional index over window words
    double beta_const = 0.0;

    UnipotentFamily(SftBase b, int lo, int hi, std::vector<double> table, double beta)
        : base(std::move(b)), win_lo(lo), win_hi(hi), alpha_table(std::move(table)),
          beta_const(beta) {}

    double alpha(const SymbolicPoint& x) const;
    SymbolicCocycle upper_triangular() const;
};

struct UnipotentReport {
    bool conjugate = true;
    double ratio_bound = 1.0;  // max over orbits of max(|S/(n beta)|, |n beta/S|)
    std::vector<double> birkhoff_sums;
    size_t witness_orbit = 0;  // first non-conjugate orbit when !conjugate
};

/// Per orbit: S = Birkhoff sum of alpha; conjugate iff (S = 0 <=> n beta = 0).
UnipotentReport unipotent_periodic_criterion(const UnipotentFamily& fam,
                                             const std::vector<PeriodicOrbit>& orbits,
                                             double zero_tol = 1e-12);

} // namespace coho
