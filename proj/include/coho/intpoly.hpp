// Exact integer polynomial arithmetic: characteristic polynomials of
// integer matrices, factorization over Q (monic, degree <= 4 fully
// supported), and root-modulus sets per irreducible factor.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace coho {

using IntMatrix = Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>;

/// Coefficients c[0] + c[1] x + ... + c[n] x^n, c[n] != 0 (monic here).
using IntPoly = std::vector<long long>;

/// Exact determinant by fraction-free (Bareiss) elimination.
long long int_det(const IntMatrix& a);

/// Exact characteristic polynomial det(xI - A), monic of degree d.
IntPoly char_poly(const IntMatrix& a);

/// Monic integer factorization over Q.  Complete for degree <= 4;
/// degrees 5,6 are handled via rational roots plus quadratic splits and
/// may conservatively return a reducible factor as one block (throws
/// Error if completeness cannot be guaranteed).
std::vector<IntPoly> factor_monic(const IntPoly& p);

/// Moduli of the complex roots, deduplicated within tol, sorted ascending.
std::vector<double> root_moduli(const IntPoly& p, double tol = 1e-10);

/// All complex roots (via companion matrix for degree >= 3).
std::vector<std::complex<double>> poly_roots(const IntPoly& p);

} // namespace coho
