#pragma once

#include <Eigen/Dense>
#include <istream>
#include <string>

#include "editdiff/alphabet.hpp"

namespace editdiff {

/// BLOSUM62 integer scores reordered to the standard 20-letter alphabet.
Eigen::MatrixXd blosum62();

/// Reads a whitespace-delimited score table.
///
/// Format: optional '#' comment lines, then a header line listing column
/// residue letters, then one line per row: the row letter followed by one
/// integer per header column. Letters absent from `alphabet` (e.g. B, Z, X, *)
/// are ignored; every alphabet letter must appear as both row and column.
/// The result is indexed in alphabet order.
Eigen::MatrixXd read_score_matrix(std::istream& in, const Alphabet& alphabet);
Eigen::MatrixXd load_score_matrix(const std::string& path, const Alphabet& alphabet);

}  // namespace editdiff
