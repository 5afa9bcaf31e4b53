#include "editdiff/losses.hpp"

#include <cmath>

#include "editdiff/error.hpp"

namespace editdiff {

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double log_sigmoid(double x) {
    return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

double binary_cross_entropy_logit(double logit, bool y) {
    return y ? -log_sigmoid(logit) : -log_sigmoid(-logit);
}

std::vector<double> DenoiserOutput::residue_probs(std::size_t i) const {
    const int k = residues();
    const auto row = sub_logits.row(static_cast<Eigen::Index>(i)).head(k);
    const double top = row.maxCoeff();
    std::vector<double> p(static_cast<std::size_t>(k));
    double z = 0.0;
    for (int a = 0; a < k; ++a) {
        p[static_cast<std::size_t>(a)] = std::exp(row(a) - top);
        z += p[static_cast<std::size_t>(a)];
    }
    for (double& v : p) v /= z;
    return p;
}

double DenoiserOutput::residue_log_prob(std::size_t i, Token token) const {
    const int k = residues();
    const auto row = sub_logits.row(static_cast<Eigen::Index>(i)).head(k);
    const double top = row.maxCoeff();
    const double lse = top + std::log((row.array() - top).exp().sum());
    return row(token) - lse;
}

std::size_t HeadTargets::active_substitutions() const {
    std::size_t n = 0;
    for (Token t : sub_target) n += (t >= 0);
    return n;
}

LossBreakdown decomposed_losses(const DenoiserOutput& out, const HeadTargets& targets, const HeadWeights& weights,
                                double lambda, DenoiserOutput* grad) {
    const auto n = out.length();
    if (targets.sub_target.size() != n || targets.del.size() != n || targets.ins.size() != n) {
        throw Error("targets do not match the output length");
    }
    if (grad) {
        grad->sub_logits = RowMatrix::Zero(out.sub_logits.rows(), out.sub_logits.cols());
        grad->del_logits = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
        grad->ins_logits = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    }
    LossBreakdown loss;
    for (std::size_t i = 0; i < n; ++i) {
        const auto row_i = static_cast<Eigen::Index>(i);
        if (const Token target = targets.sub_target[i]; target >= 0) {
            const auto row = out.sub_logits.row(row_i);
            const double top = row.maxCoeff();
            const Eigen::RowVectorXd e = (row.array() - top).exp().matrix();
            const double z = e.sum();
            loss.sub += -(row(target) - top - std::log(z));
            if (grad) {
                grad->sub_logits.row(row_i) = (lambda * weights.gamma_sub / z) * e;
                grad->sub_logits(row_i, target) -= lambda * weights.gamma_sub;
            }
        }
        const double dl = out.del_logits(row_i);
        const double il = out.ins_logits(row_i);
        loss.del += binary_cross_entropy_logit(dl, targets.del[i] != 0);
        loss.ins += binary_cross_entropy_logit(il, targets.ins[i] != 0);
        if (grad) {
            grad->del_logits(row_i) = lambda * weights.gamma_del * (sigmoid(dl) - targets.del[i]);
            grad->ins_logits(row_i) = lambda * weights.gamma_ins * (sigmoid(il) - targets.ins[i]);
        }
    }
    loss.total = lambda * (weights.gamma_sub * loss.sub + weights.gamma_del * loss.del + weights.gamma_ins * loss.ins);
    if (!std::isfinite(loss.total)) throw DivergenceError("non-finite loss");
    return loss;
}

}  // namespace editdiff
