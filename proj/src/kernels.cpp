#include "editdiff/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "editdiff/error.hpp"

namespace editdiff {

NoiseSchedule linear_schedule(int steps) {
    if (steps < 1) throw Error("schedule needs at least one step");
    NoiseSchedule s{steps, std::vector<double>(static_cast<std::size_t>(steps) + 1)};
    for (int t = 0; t <= steps; ++t) {
        s.alpha_bar[static_cast<std::size_t>(t)] = 1.0 - static_cast<double>(t) / steps;
    }
    return s;
}

NoiseSchedule cosine_schedule(int steps) {
    if (steps < 1) throw Error("schedule needs at least one step");
    NoiseSchedule s{steps, std::vector<double>(static_cast<std::size_t>(steps) + 1)};
    for (int t = 0; t <= steps; ++t) {
        const double c = std::cos(0.5 * std::numbers::pi * t / steps);
        s.alpha_bar[static_cast<std::size_t>(t)] = c * c;
    }
    s.alpha_bar.front() = 1.0;
    s.alpha_bar.back() = 0.0;
    return s;
}

NoiseSchedule make_schedule(ScheduleKind kind, int steps) {
    return kind == ScheduleKind::cosine ? cosine_schedule(steps) : linear_schedule(steps);
}

void KernelParams::validate() const {
    auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in_unit(omega_del) || !in_unit(omega_ins) || !in_unit(rho_mask)) {
        throw Error("kernel rates must lie in [0, 1]");
    }
}

StochasticMatrix uniform_substitution_kernel(int k) {
    if (k < 2) throw Error("uniform kernel needs K >= 2");
    return StochasticMatrix::Constant(k, k, 1.0 / k);
}

Eigen::MatrixXd blosum_substitution_kernel(const Eigen::MatrixXd& scores, double tau_b) {
    if (!(tau_b > 0.0)) throw Error("BLOSUM temperature must be positive");
    if (scores.rows() != scores.cols()) throw Error("BLOSUM score matrix must be square");
    Eigen::MatrixXd m(scores.rows(), scores.cols());
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        const Eigen::RowVectorXd scaled = scores.row(i) / tau_b;
        const double top = scaled.maxCoeff();
        const Eigen::RowVectorXd e = (scaled.array() - top).exp().matrix();
        m.row(i) = e / e.sum();
    }
    return m;
}

StochasticMatrix blosum_transition_kernel(const Eigen::MatrixXd& scores, double tau_b) {
    return blosum_substitution_kernel(scores, tau_b).transpose();
}

bool is_column_stochastic(const Eigen::MatrixXd& m, double tol) {
    if ((m.array() < 0.0).any()) return false;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        if (std::abs(m.col(j).sum() - 1.0) > tol) return false;
    }
    return true;
}

TransitionMatrix build_transition_matrix(const KernelParams& params, const StochasticMatrix& sub) {
    params.validate();
    if (sub.rows() != sub.cols() || !is_column_stochastic(sub)) {
        throw Error("substitution kernel must be square and column-stochastic");
    }
    const Eigen::Index k = sub.rows();
    const Eigen::Index mask = k;
    const Eigen::Index gap = k + 1;
    const double keep = 1.0 - params.omega_del;

    TransitionMatrix out{StochasticMatrix::Zero(k + 2, k + 2)};
    auto& q = out.q;
    q.topLeftCorner(k, k) = keep * (1.0 - params.rho_mask) * sub;
    q.block(mask, 0, 1, k).setConstant(keep * params.rho_mask);
    q.block(gap, 0, 1, k).setConstant(params.omega_del);
    q(mask, mask) = 1.0;
    q.block(0, gap, k, 1).setConstant(params.omega_ins / static_cast<double>(k));
    q(gap, gap) = 1.0 - params.omega_ins;
    return out;
}

std::vector<bool> corruption_flags(std::size_t n, int t, const NoiseSchedule& schedule, Rng& rng) {
    const double keep = schedule.at(t);
    std::vector<bool> flags(n);
    for (std::size_t j = 0; j < n; ++j) flags[j] = !rng.bernoulli(keep);
    return flags;
}

LatentAlignment forward_noise(const LatentAlignment& z0, int t, const NoiseSchedule& schedule,
                              const TransitionMatrix& q, Rng& rng) {
    if (t < 0 || t > schedule.steps) throw Error("timestep outside the schedule");
    const auto flags = corruption_flags(z0.size(), t, schedule, rng);
    LatentAlignment zt = z0;
    for (std::size_t j = 0; j < z0.size(); ++j) {
        if (flags[j]) zt.tokens[j] = static_cast<Token>(rng.categorical(q.column(z0.tokens[j])));
    }
    return zt;
}

double confidence_threshold(std::span<const double> confidences, double rho_mask) {
    if (rho_mask < 0.0 || rho_mask > 1.0) throw Error("rho_mask must lie in [0, 1]");
    const auto n = confidences.size();
    // Smallest count m with m/n >= rho; the epsilon absorbs products like
    // 0.3 * 10 = 3.0000000000000004.
    auto m = static_cast<std::size_t>(std::ceil(rho_mask * static_cast<double>(n) - 1e-9));
    m = std::min(m, n);
    if (m == 0) return -std::numeric_limits<double>::infinity();
    std::vector<double> sorted(confidences.begin(), confidences.end());
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(m - 1), sorted.end());
    return sorted[m - 1];
}

std::vector<Distribution> confidence_gate(const std::vector<Distribution>& rows, double rho_mask) {
    if (rows.empty()) throw Error("confidence gate needs at least one row");
    std::vector<double> conf(rows.size());
    for (std::size_t j = 0; j < rows.size(); ++j) {
        conf[j] = *std::max_element(rows[j].begin(), rows[j].end());
    }
    const double tau = confidence_threshold(conf, rho_mask);
    std::vector<Distribution> out(rows.size());
    for (std::size_t j = 0; j < rows.size(); ++j) {
        const std::size_t k = rows[j].size();
        out[j].assign(k + 1, 0.0);
        if (conf[j] <= tau) {
            out[j][k] = 1.0;
        } else {
            std::copy(rows[j].begin(), rows[j].end(), out[j].begin());
        }
    }
    return out;
}

}  // namespace editdiff
