#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "editdiff/denoiser.hpp"

namespace editdiff {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::int64_t step = 0;

    static AdamState for_params(const DenoiserParams& params) {
        return {std::vector<double>(params.count(), 0.0), std::vector<double>(params.count(), 0.0), 0};
    }
};

/// One bias-corrected Adam step in place; parameters are rounded back to
/// float32 afterwards. Throws DivergenceError on non-finite gradients.
void apply_update(DenoiserParams& params, std::span<const double> grads, AdamState& state, double lr,
                  const AdamConfig& config = {});

/// Linear warmup to `peak` over `warmup` steps, then linear decay to
/// `floor_fraction * peak` at `total` steps.
double learning_rate_at(int step, int total, int warmup, double peak, double floor_fraction);

}  // namespace editdiff
