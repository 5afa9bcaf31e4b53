#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "editdiff/sequence.hpp"

namespace editdiff {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Per-position head outputs for one observed sequence.
struct DenoiserOutput {
    RowMatrix sub_logits;  ///< L x (K+1): residues then mask
    Eigen::VectorXd del_logits;
    Eigen::VectorXd ins_logits;

    std::size_t length() const { return static_cast<std::size_t>(sub_logits.rows()); }
    int residues() const { return static_cast<int>(sub_logits.cols()) - 1; }

    /// Substitution distribution at position i renormalized over residues.
    std::vector<double> residue_probs(std::size_t i) const;
    /// log of residue_probs(i)[token].
    double residue_log_prob(std::size_t i, Token token) const;
};

/// Anything that maps an observed sequence to the three head outputs. The
/// trained denoiser is the main implementation; tests plug in stubs.
class HeadModel {
public:
    virtual ~HeadModel() = default;

    virtual int residues() const = 0;
    virtual std::size_t max_len() const = 0;
    virtual DenoiserOutput forward(const ObservedSequence& x) const = 0;
};

double sigmoid(double x);
/// Numerically stable log(sigmoid(x)).
double log_sigmoid(double x);

}  // namespace editdiff
