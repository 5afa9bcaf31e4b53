#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "editdiff/alphabet.hpp"
#include "editdiff/rng.hpp"
#include "editdiff/sequence.hpp"

namespace editdiff {

/// Cumulative keep-probability alpha_bar(t) for t = 0..T.
struct NoiseSchedule {
    int steps = 0;
    std::vector<double> alpha_bar;

    double at(int t) const { return alpha_bar.at(static_cast<std::size_t>(t)); }
};

/// alpha_bar(t) = 1 - t/T.
NoiseSchedule linear_schedule(int steps);
/// alpha_bar(t) = cos^2(pi/2 * t/T), pinned to exactly 0 at t = T.
NoiseSchedule cosine_schedule(int steps);

enum class ScheduleKind { linear, cosine };
NoiseSchedule make_schedule(ScheduleKind kind, int steps);

struct KernelParams {
    double omega_del = 0.1;
    double omega_ins = 0.1;
    double rho_mask = 0.5;

    void validate() const;
};

/// Square matrix indexed (target, source); each column is a distribution.
using StochasticMatrix = Eigen::MatrixXd;

/// (K+2)x(K+2) noise transition over residues, mask (id K) and gap (id K+1).
struct TransitionMatrix {
    StochasticMatrix q;

    int residues() const { return static_cast<int>(q.rows()) - 2; }
    double operator()(Token target, Token source) const { return q(target, source); }
    std::span<const double> column(Token source) const {
        return {q.data() + static_cast<Eigen::Index>(source) * q.rows(), static_cast<std::size_t>(q.rows())};
    }
};

/// All entries 1/K.
StochasticMatrix uniform_substitution_kernel(int k);

/// Row-wise softmax of scores / tau_b; rows sum to one (row i = source i).
Eigen::MatrixXd blosum_substitution_kernel(const Eigen::MatrixXd& scores, double tau_b);

/// Column-stochastic form of the BLOSUM softmax: column j is softmaxed row j.
StochasticMatrix blosum_transition_kernel(const Eigen::MatrixXd& scores, double tau_b);

bool is_column_stochastic(const Eigen::MatrixXd& m, double tol = 1e-9);

/// Block noise matrix. For a residue source the residue targets get
/// (1-w_del)(1-rho)*sub, mask gets (1-w_del)*rho and gap gets w_del; mask is
/// absorbing; a gap becomes each residue with w_ins/K and stays with 1-w_ins.
TransitionMatrix build_transition_matrix(const KernelParams& params, const StochasticMatrix& sub);

/// Independently per slot: keep with alpha_bar(t), otherwise draw from Q's
/// column for the current token.
LatentAlignment forward_noise(const LatentAlignment& z0, int t, const NoiseSchedule& schedule,
                              const TransitionMatrix& q, Rng& rng);

/// Per-slot corruption coins: true where the slot is resampled at level t.
std::vector<bool> corruption_flags(std::size_t n, int t, const NoiseSchedule& schedule, Rng& rng);

/// A distribution over residues (size K), or over residues plus mask (K+1).
using Distribution = std::vector<double>;

/// Replaces the rho_mask fraction of least-confident rows by a point mass on
/// mask. Confidence is the max residue probability; rows whose confidence is
/// at or below the rho-quantile are masked. Returned rows have K+1 entries.
std::vector<Distribution> confidence_gate(const std::vector<Distribution>& rows, double rho_mask);

/// The quantile threshold used by confidence_gate (-inf when nothing is masked).
double confidence_threshold(std::span<const double> confidences, double rho_mask);

}  // namespace editdiff
