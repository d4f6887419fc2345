// Hyperbolic toral automorphisms with exact rational periodic-point
// enumeration (Smith normal form), and C^1-small perturbations with
// closed-form derivatives.
#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "coho/intpoly.hpp"
#include "coho/linalg.hpp"

namespace coho {

/// Exact rational with 64-bit numerator/denominator (128-bit intermediates).
struct Rational {
    long long num = 0, den = 1;

    Rational() = default;
    Rational(long long n) : num(n), den(1) {}
    Rational(long long n, long long d);

    Rational operator+(const Rational& o) const;
    Rational operator-(const Rational& o) const;
    Rational operator*(const Rational& o) const;
    bool operator==(const Rational& o) const { return num == o.num && den == o.den; }
    bool operator!=(const Rational& o) const { return !(*this == o); }
    bool operator<(const Rational& o) const;

    /// Fractional part in [0,1).
    Rational frac() const;
    double to_double() const { return double(num) / double(den); }
    std::string to_string() const;
    static Rational parse(const std::string& s);
};

using RationalVec = std::vector<Rational>;

/// Smith normal form: returns unimodular U, V and diagonal D with U*A*V = D,
/// diagonal entries nonnegative.
void smith_normal_form(const IntMatrix& a, IntMatrix& u, IntMatrix& d, IntMatrix& v);

/// Exact inverse of a unimodular integer matrix (adjugate over det = +-1).
IntMatrix unimodular_inverse(const IntMatrix& a);

struct WeakIrreducibilityReport {
    bool weakly_irreducible = false;
    std::vector<IntPoly> factors;                  // irreducible over Q
    std::vector<std::vector<double>> moduli_sets;  // per factor, sorted
};

/// Hyperbolic element of GL(d,Z): integer entries, |det| = 1, no eigenvalue
/// of modulus within tol of 1.
class ToralAutomorphism {
public:
    explicit ToralAutomorphism(IntMatrix m, double hyperbolicity_tol = 1e-9);

    int dimension() const { return int(m_.rows()); }
    const IntMatrix& matrix() const { return m_; }
    Matrix matrix_d() const;

    Vector apply(const Vector& x) const;       // mod 1
    RationalVec apply(const RationalVec& x) const;  // exact, mod 1

    IntMatrix power(int n) const;  // exact L^n, n >= 0

    /// Exact count |det(L^n - I)| of fixed points of L^n.
    long long fixed_point_count(int n) const;

    /// All x in [0,1)^d with (L^n - I) x integral, exact rationals.
    std::vector<RationalVec> fixed_points(int n, long long cap = 2'000'000) const;

    WeakIrreducibilityReport weak_irreducibility(double tol = 1e-10) const;

    /// Real invariant splitting into stable/unstable subspaces,
    /// columns orthonormal.
    void stable_unstable(Matrix& stable, Matrix& unstable) const;

    static ToralAutomorphism cat_map();  // [[2,1],[1,1]]

private:
    IntMatrix m_;
};

struct TorusPeriodicOrbit {
    RationalVec point;  // lexicographically smallest point of the orbit
    int period = 1;     // minimal
};

std::vector<TorusPeriodicOrbit> torus_periodic_orbits(const ToralAutomorphism& l,
                                                      int n_max,
                                                      long long cap = 2'000'000);

/// Intersection W^s_loc(x) cap W^u_loc(z) for a linear automorphism:
/// exact affine solve in the eigenbasis.  Throws NotInProductRange if the
/// points are farther apart than radius.
Vector linear_local_product(const ToralAutomorphism& l, const Vector& x,
                            const Vector& z, double radius = 0.45);

/// Closes a nearly periodic rational segment: finds exact p with
/// L^n p = p mod 1 near x.  Throws NotCloseEnough above the threshold.
struct TorusClosingResult {
    RationalVec point;
    int period = 1;
    double shadowing_bound = 0.0;
    double input_gap = 0.0;
    double k1 = 0.0;
};
TorusClosingResult torus_anosov_closing(const ToralAutomorphism& l, const RationalVec& x,
                                        int n, double threshold = 0.25);

double torus_distance(const Vector& a, const Vector& b);

/// Interface for perturbed torus maps f = L + P with P periodic and
/// differentiable in closed form.
class TorusMap {
public:
    virtual ~TorusMap() = default;
    virtual int dimension() const = 0;
    virtual const ToralAutomorphism& linear_part() const = 0;
    /// Periodic displacement P(x) = f(x) - Lx as a map T^d -> R^d.
    virtual Vector displacement(const Vector& x) const = 0;
    virtual Matrix derivative(const Vector& x) const = 0;

    Vector apply(const Vector& x) const;          // mod 1
    Vector apply_inverse(const Vector& y) const;  // mod 1, fixed-point solve
    Vector iterate(const Vector& x, int n) const; // n may be negative
};

/// One trigonometric term  amp * {sin|cos}(2 pi k.x) * v.
struct TrigTerm {
    double amplitude = 0.0;
    Eigen::VectorXi frequency;  // integer vector k
    Vector direction;           // v
    bool use_sin = true;
};

/// f(x) = Lx + sum of trigonometric terms (mod 1).
class PerturbedToralMap : public TorusMap {
public:
    PerturbedToralMap(ToralAutomorphism l, std::vector<TrigTerm> terms);

    int dimension() const override { return linear_.dimension(); }
    const ToralAutomorphism& linear_part() const override { return linear_; }
    Vector displacement(const Vector& x) const override;
    Matrix derivative(const Vector& x) const override;

    /// sup-norm bound of DP over the torus (coarse, from coefficients).
    double derivative_bound() const;
    const std::vector<TrigTerm>& terms() const { return terms_; }

private:
    ToralAutomorphism linear_;
    std::vector<TrigTerm> terms_;
};

/// f = T o L o T^{-1} with T = id + tau, tau a trig perturbation small
/// enough that T is invertible.  Used to plant smooth conjugacies.
class ConjugatedToralMap : public TorusMap {
public:
    ConjugatedToralMap(ToralAutomorphism l, std::vector<TrigTerm> tau);

    int dimension() const override { return linear_.dimension(); }
    const ToralAutomorphism& linear_part() const override { return linear_; }
    Vector displacement(const Vector& x) const override;
    Matrix derivative(const Vector& x) const override;

    Vector t_forward(const Vector& y) const;   // T(y) = y + tau(y), mod 1
    Vector t_inverse(const Vector& x) const;   // mod 1
    Matrix t_derivative(const Vector& y) const;

private:
    ToralAutomorphism linear_;
    std::vector<TrigTerm> tau_;
    Vector tau_eval(const Vector& y) const;
    Matrix tau_derivative(const Vector& y) const;
};

} // namespace coho
