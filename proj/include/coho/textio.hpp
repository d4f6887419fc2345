// Text formats: whitespace matrices, locally-constant generator tables,
// torus points as exact fractions, transfer-map JSON, CSV reports.
#pragma once

#include <iosfwd>
#include <string>

#include "coho/holonomy.hpp"
#include "coho/spectrum.hpp"
#include "coho/transfer.hpp"

namespace coho {

/// Row-major decimal with 17 significant digits.
std::string format_double(double v);
std::string format_matrix(const Matrix& m);

Matrix parse_matrix(std::istream& in, int rows, int cols);
Eigen::MatrixXi parse_int_matrix(std::istream& in, int rows, int cols);

/// One line per window word, then d x d matrix entries.
void write_generator_table(std::ostream& out, const SymbolicCocycle& a);
SymbolicCocycle read_generator_table(std::istream& in, SftBase base, int win_lo,
                                     int win_hi, int dimension, double hoelder = 1.0);

std::string rational_vec_to_string(const RationalVec& v);
RationalVec parse_rational_vec(const std::string& s);

/// Transfer maps as JSON: anchor, beta, constant, then (point, matrix) rows.
std::string transfer_map_to_json(const TransferMap& tm);
TransferMap transfer_map_from_json(const std::string& text);

/// CSV rows: x, y, direction, n, error_bound, ||H - Id||.
void write_holonomy_csv(std::ostream& out, const std::vector<HolonomyOperator>& hs);

/// CSV: sample id, point, block index, frame column entries.
void write_splitting_csv(std::ostream& out, const SymbolicSplittingField& s);

} // namespace coho
