#pragma once

#include <cstdint>
#include <vector>

#include "editdiff/model.hpp"

namespace editdiff {

/// Supervision for one observed noisy sequence, aligned with its positions.
struct HeadTargets {
    std::vector<Token> sub_target;  ///< clean residue, or -1 when the position is inactive
    std::vector<std::uint8_t> del;  ///< 1 when the position should be deleted
    std::vector<std::uint8_t> ins;  ///< 1 when a residue is missing to the right

    std::size_t size() const { return del.size(); }
    std::size_t active_substitutions() const;
};

struct HeadWeights {
    double gamma_sub = 1.0;
    double gamma_del = 0.5;
    double gamma_ins = 0.5;
};

struct LossBreakdown {
    double sub = 0.0;
    double del = 0.0;
    double ins = 0.0;
    double total = 0.0;

    LossBreakdown& operator+=(const LossBreakdown& o) {
        sub += o.sub;
        del += o.del;
        ins += o.ins;
        total += o.total;
        return *this;
    }
    LossBreakdown& operator/=(double d) {
        sub /= d;
        del /= d;
        ins /= d;
        total /= d;
        return *this;
    }
};

/// Summed cross-entropy over active substitution positions (softmax over all
/// K+1 logits), summed BCE for the deletion and insertion heads, and
/// total = lambda * (g_sub*L_sub + g_del*L_del + g_ins*L_ins).
///
/// If `grad` is non-null it receives d total / d logits with the same shapes.
LossBreakdown decomposed_losses(const DenoiserOutput& out, const HeadTargets& targets, const HeadWeights& weights,
                                double lambda, DenoiserOutput* grad = nullptr);

/// BCE(y, sigmoid(logit)) computed from the logit.
double binary_cross_entropy_logit(double logit, bool y);

}  // namespace editdiff
