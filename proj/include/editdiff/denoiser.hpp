#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "editdiff/losses.hpp"
#include "editdiff/model.hpp"
#include "editdiff/rng.hpp"

namespace editdiff {

struct DenoiserConfig {
    int residues = 20;  ///< K; the model reads K+1 token ids (residues + mask)
    int embed_dim = 64;
    int num_layers = 2;
    int num_heads = 4;
    int ff_dim = 128;
    int max_len = 256;
    bool positional = true;  ///< sinusoidal positions; off only in symmetry tests

    int vocab_size() const { return residues + 1; }
    void validate() const;
    bool operator==(const DenoiserConfig&) const = default;
};

struct TensorInfo {
    std::string name;
    std::vector<std::uint32_t> dims;
    std::size_t offset = 0;
    std::size_t size = 0;
};

/// Named parameter tensors over one flat buffer.
///
/// Values are held as doubles for arithmetic but are always exactly
/// representable as float32: initialization and every optimizer step round
/// through float, which is also the on-disk precision.
class DenoiserParams {
public:
    DenoiserParams() = default;

    static DenoiserParams zeros(const DenoiserConfig& config);
    static DenoiserParams initialize(const DenoiserConfig& config, Rng& rng);

    const DenoiserConfig& config() const { return config_; }
    const std::vector<TensorInfo>& tensors() const { return layout_; }
    const TensorInfo& tensor(std::string_view name) const;

    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }
    std::span<double> values(std::string_view name);
    std::span<const double> values(std::string_view name) const;
    std::size_t count() const { return values_.size(); }

    /// Round every value to the nearest float32.
    void round_to_float();

    bool operator==(const DenoiserParams& o) const { return config_ == o.config_ && values_ == o.values_; }

private:
    DenoiserConfig config_;
    std::vector<TensorInfo> layout_;
    std::vector<double> values_;
};

/// One training sequence with its head supervision.
struct LabeledExample {
    ObservedSequence input;
    HeadTargets targets;
    double lambda = 1.0;
    int t = 0;
};

using TrainBatch = std::vector<LabeledExample>;
using Gradients = std::vector<double>;

/// Pre-norm bidirectional transformer encoder with three heads: substitution
/// (K+1 logits), deletion (1 logit) and insertion (1 logit) per position.
/// No timestep input: the noise level is implicit in the sequence.
class Denoiser final : public HeadModel {
public:
    explicit Denoiser(DenoiserParams params);

    int residues() const override { return params_.config().residues; }
    std::size_t max_len() const override { return static_cast<std::size_t>(params_.config().max_len); }
    const DenoiserConfig& config() const { return params_.config(); }

    DenoiserOutput forward(const ObservedSequence& x) const override;

    /// Loss of one example; adds d loss / d params into `grad`.
    LossBreakdown accumulate_gradient(const LabeledExample& example, const HeadWeights& weights,
                                      std::span<double> grad) const;

    const DenoiserParams& params() const { return params_; }
    DenoiserParams& params() { return params_; }

private:
    struct Cache;
    DenoiserOutput run(const ObservedSequence& x, Cache* cache) const;
    void backward(const Cache& cache, const DenoiserOutput& dlogits, std::span<double> grad) const;

    DenoiserParams params_;
    RowMatrix positions_;
};

/// Batch-mean losses and the exact gradient of the batch-mean total loss.
/// Examples are processed by up to `threads` workers; the reduction order is
/// fixed, so the result does not depend on the thread count.
std::pair<LossBreakdown, Gradients> loss_and_gradients(const Denoiser& model, const TrainBatch& batch,
                                                       const HeadWeights& weights, int threads = 1);

/// Batch-mean losses without gradients.
LossBreakdown evaluate_loss(const Denoiser& model, const TrainBatch& batch, const HeadWeights& weights,
                            int threads = 1);

}  // namespace editdiff
