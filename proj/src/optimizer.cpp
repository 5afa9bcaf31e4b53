#include "editdiff/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "editdiff/error.hpp"

namespace editdiff {

void apply_update(DenoiserParams& params, std::span<const double> grads, AdamState& state, double lr,
                  const AdamConfig& config) {
    auto values = params.values();
    if (grads.size() != values.size() || state.m.size() != values.size() || state.v.size() != values.size()) {
        throw Error("optimizer state does not match the parameter count");
    }
    for (double g : grads) {
        if (!std::isfinite(g)) throw DivergenceError("non-finite gradient passed to the optimizer");
    }
    ++state.step;
    const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < values.size(); ++i) {
        state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * grads[i];
        state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * grads[i] * grads[i];
        const double m_hat = state.m[i] / c1;
        const double v_hat = state.v[i] / c2;
        values[i] -= lr * m_hat / (std::sqrt(v_hat) + config.eps);
    }
    params.round_to_float();
}

double learning_rate_at(int step, int total, int warmup, double peak, double floor_fraction) {
    if (warmup > 0 && step < warmup) return peak * static_cast<double>(step + 1) / warmup;
    const int span = std::max(1, total - warmup);
    const double progress = std::clamp(static_cast<double>(step - warmup) / span, 0.0, 1.0);
    return peak * (1.0 - (1.0 - floor_fraction) * progress);
}

}  // namespace editdiff
