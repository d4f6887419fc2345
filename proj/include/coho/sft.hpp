// Mixing subshifts of finite type: exact eventually-periodic points,
// the d_nu metric, local product structure, periodic orbits, homoclinic
// points and word closing.
#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "coho/errors.hpp"

namespace coho {

/// Mixing SFT on k symbols with 0/1 transition matrix M and metric
/// d_nu(x,y) = nu^{n(x,y)}.  Construction verifies that M^N is positive.
class SftBase {
public:
    SftBase(Eigen::MatrixXi transition, double nu, int mixing_power = 0);

    int alphabet_size() const { return int(m_.rows()); }
    double nu() const { return nu_; }
    int mixing_power() const { return mixing_power_; }
    bool admissible(int a, int b) const { return m_(a, b) == 1; }
    const Eigen::MatrixXi& transition() const { return m_; }

    /// trace(M^n) = number of fixed points of f^n (exact integers).
    long long fixed_point_count(int n) const;

    static SftBase full_shift(int k, double nu);
    static SftBase golden_mean(double nu);  // forbidden word "11"

private:
    Eigen::MatrixXi m_;
    double nu_;
    int mixing_power_;
};

/// Eventually-periodic bi-infinite admissible sequence.  The core occupies
/// indices [core_start, core_start + core.size() - 1]; the past tail word
/// fills indices below, anchored so its last letter sits just left of the
/// core; the future tail fills indices above, anchored at the core's end.
class SymbolicPoint {
public:
    SymbolicPoint() = default;
    SymbolicPoint(std::vector<int> past, std::vector<int> core,
                  std::vector<int> future, long core_start = 0);

    /// Constant sequence of one symbol (a fixed point when M(s,s)=1).
    static SymbolicPoint fixed(int symbol);
    /// Purely periodic point ...www.www... with word w anchored at index 0.
    static SymbolicPoint periodic(const std::vector<int>& word);

    int at(long i) const;
    std::vector<int> window(long lo, long hi) const;  // inclusive

    long core_lo() const { return core_start_; }
    long core_hi() const { return core_start_ + long(core_.size()) - 1; }
    const std::vector<int>& past_word() const { return past_; }
    const std::vector<int>& future_word() const { return future_; }
    const std::vector<int>& core() const { return core_; }

    /// Shift map: (fx)_i = x_{i+1}.  Exact.
    SymbolicPoint shifted(long n = 1) const;

    bool admissible_for(const SftBase& base) const;
    /// Minimal tails, maximally absorbed core, empty-core anchor at 0.
    void normalize();

    bool operator==(const SymbolicPoint& other) const;
    bool operator!=(const SymbolicPoint& other) const { return !(*this == other); }
    /// Lexicographic order on a canonical comparison window; total order
    /// on normalized representations, used for deterministic output.
    bool operator<(const SymbolicPoint& other) const;

    std::string to_string() const;
    static SymbolicPoint parse(const std::string& text);

private:
    std::vector<int> past_{0}, core_{}, future_{0};
    long core_start_ = 0;

    long compare_window_radius(const SymbolicPoint& other) const;
};

struct PeriodicOrbit {
    SymbolicPoint point;  // lexicographically smallest point on the orbit
    int period = 1;       // minimal
};

/// d_nu(x,y) = nu^{min |i| : x_i != y_i}; 0 iff x == y.
double sft_distance(const SymbolicPoint& x, const SymbolicPoint& y,
                    const SftBase& base);

/// w with w_i = x_i for i >= 0 and w_i = z_i for i <= 0.
/// Requires x_0 == z_0 (local product range).
SymbolicPoint local_product(const SymbolicPoint& x, const SymbolicPoint& z);

/// All orbits of minimal period <= n_max, deterministically ordered.
std::vector<PeriodicOrbit> enumerate_periodic_orbits(const SftBase& base, int n_max,
                                                     long long cap = 2'000'000);

/// All points agreeing with the fixed point q outside [-depth, depth].
std::vector<SymbolicPoint> homoclinic_points(const SftBase& base,
                                             const SymbolicPoint& q, int depth);

struct ClosingResult {
    PeriodicOrbit orbit;
    double shadowing_bound = 0.0;  // max_i dist(f^i x, f^i p)
    double input_gap = 0.0;        // dist(x, f^n x)
    double k1 = 0.0;               // measured closing constant
};

/// Closes the length-n orbit segment of x into a periodic word orbit.
/// Requires dist(x, f^n x) <= threshold.
ClosingResult anosov_closing(const SftBase& base, const SymbolicPoint& x, int n,
                             double threshold = 1.0);

} // namespace coho
