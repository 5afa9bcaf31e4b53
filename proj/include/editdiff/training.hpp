#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "editdiff/denoiser.hpp"
#include "editdiff/kernels.hpp"

namespace editdiff {

enum class KernelMode { mask, uniform, blosum, contextual };

std::string_view kernel_mode_name(KernelMode mode);
KernelMode parse_kernel_mode(std::string_view name);

enum class LambdaMode { uniform, inverse_t };

std::string_view lambda_mode_name(LambdaMode mode);
LambdaMode parse_lambda_mode(std::string_view name);
double lambda_weight(LambdaMode mode, int t);

struct NoiseConfig {
    int steps = 500;
    ScheduleKind schedule = ScheduleKind::linear;
    KernelParams kernel;
    double blosum_tau = 2.0;
};

/// The forward process for one residue alphabet: schedule plus the static
/// transition matrices, with contextual noise computed on demand.
class NoiseProcess {
public:
    /// `blosum_scores` defaults to BLOSUM62 restricted to the first K letters.
    NoiseProcess(const NoiseConfig& config, int residues, std::optional<Eigen::MatrixXd> blosum_scores = std::nullopt);

    const NoiseConfig& config() const { return config_; }
    const NoiseSchedule& schedule() const { return schedule_; }
    const Alphabet& alphabet() const { return alphabet_; }
    int residues() const { return alphabet_.size(); }

    /// Static transition matrix of a non-contextual mode.
    const TransitionMatrix& matrix(KernelMode mode) const;

    /// z_t given z0. Contextual mode without a model uses the mask kernel.
    LatentAlignment corrupt(const LatentAlignment& z0, int t, KernelMode mode, const HeadModel* model, Rng& rng) const;

private:
    NoiseConfig config_;
    Alphabet alphabet_;
    NoiseSchedule schedule_;
    TransitionMatrix mask_;
    TransitionMatrix uniform_;
    TransitionMatrix blosum_;
};

/// Observed noisy sequence and head targets read off a (z0, z_t) pair via the
/// index map of z_t. Throws EmptySequenceError if z_t is all gaps.
std::pair<ObservedSequence, HeadTargets> alignment_targets(const LatentAlignment& z0, const LatentAlignment& zt,
                                                           const Alphabet& alphabet);

struct TrainingExample {
    LabeledExample example;
    LatentAlignment z0;
    LatentAlignment zt;
};

/// Samples t uniformly from 1..T, a random alignment of x0 and its noisy
/// version. Draws whose collapse is empty or longer than max_len are retried
/// up to three times; nullopt means the example is skipped.
std::optional<TrainingExample> make_training_example(const ObservedSequence& x0, const NoiseProcess& noise,
                                                     KernelMode mode, const HeadModel* model, LambdaMode lambda_mode,
                                                     std::size_t max_len, Rng& rng);

struct TrainingConfig {
    DenoiserConfig model;
    NoiseConfig noise;
    KernelMode main_mode = KernelMode::contextual;
    int steps = 2000;
    int warmup_steps = 200;  ///< steps trained with the mask kernel before main_mode
    int batch_size = 8;
    double lr = 1e-3;
    double lr_floor = 0.1;   ///< final learning rate as a fraction of lr
    int lr_warmup = 100;
    HeadWeights weights;
    LambdaMode lambda_mode = LambdaMode::uniform;
    std::uint64_t seed = 0;
    int threads = 1;

    void validate() const;
};

struct StepMetrics {
    int step = 0;
    LossBreakdown loss;
    double lr = 0.0;
    KernelMode mode = KernelMode::mask;
    std::size_t skipped = 0;  ///< examples skipped in this step
};

struct TrainingResult {
    DenoiserParams params;
    std::vector<StepMetrics> metrics;
    std::size_t skipped_examples = 0;
};

/// Parameters at step 0 for this configuration's seed.
DenoiserParams initial_params(const TrainingConfig& config);

/// Mask-kernel warmup followed by the main kernel; contextual noise reads the
/// current parameter snapshot without gradients. Deterministic for a seed and
/// independent of the thread count. Throws DivergenceError on a non-finite loss.
TrainingResult train(const std::vector<ObservedSequence>& corpus, const TrainingConfig& config,
                     const std::function<void(const StepMetrics&)>& on_step = {});

/// Fixed evaluation batch built with the mask kernel.
TrainBatch make_eval_batch(const std::vector<ObservedSequence>& sequences, const NoiseProcess& noise,
                           std::size_t max_len, std::uint64_t seed);

}  // namespace editdiff
