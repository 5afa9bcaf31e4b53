#include "editdiff/training.hpp"

#include <string>

#include "editdiff/blosum.hpp"
#include "editdiff/contextual.hpp"
#include "editdiff/error.hpp"
#include "editdiff/optimizer.hpp"
#include "editdiff/parallel.hpp"

namespace editdiff {

std::string_view kernel_mode_name(KernelMode mode) {
    switch (mode) {
        case KernelMode::mask: return "mask";
        case KernelMode::uniform: return "uniform";
        case KernelMode::blosum: return "blosum";
        case KernelMode::contextual: return "contextual";
    }
    return "mask";
}

KernelMode parse_kernel_mode(std::string_view name) {
    if (name == "mask") return KernelMode::mask;
    if (name == "uniform") return KernelMode::uniform;
    if (name == "blosum") return KernelMode::blosum;
    if (name == "contextual") return KernelMode::contextual;
    throw Error("unknown kernel mode '" + std::string(name) + "' (expected mask, uniform, blosum or contextual)");
}

std::string_view lambda_mode_name(LambdaMode mode) {
    return mode == LambdaMode::uniform ? "uniform" : "inverse_t";
}

LambdaMode parse_lambda_mode(std::string_view name) {
    if (name == "uniform") return LambdaMode::uniform;
    if (name == "inverse_t") return LambdaMode::inverse_t;
    throw Error("unknown lambda mode '" + std::string(name) + "' (expected uniform or inverse_t)");
}

double lambda_weight(LambdaMode mode, int t) {
    if (t < 1) throw Error("lambda weight needs t >= 1");
    return mode == LambdaMode::uniform ? 1.0 : 1.0 / static_cast<double>(t);
}

NoiseProcess::NoiseProcess(const NoiseConfig& config, int residues, std::optional<Eigen::MatrixXd> blosum_scores)
    : config_(config), alphabet_(Alphabet::with_size(residues)), schedule_(make_schedule(config.schedule, config.steps)) {
    config_.kernel.validate();
    if (config.blosum_tau <= 0.0) throw Error("blosum temperature must be positive");
    KernelParams mask_params = config_.kernel;
    mask_params.rho_mask = 1.0;
    const StochasticMatrix uniform = uniform_substitution_kernel(residues);
    mask_ = build_transition_matrix(mask_params, uniform);
    uniform_ = build_transition_matrix(config_.kernel, uniform);
    Eigen::MatrixXd scores = blosum_scores ? *blosum_scores : Eigen::MatrixXd(blosum62().topLeftCorner(residues, residues));
    if (scores.rows() != residues || scores.cols() != residues) throw Error("score matrix does not match the alphabet size");
    blosum_ = build_transition_matrix(config_.kernel, blosum_transition_kernel(scores, config.blosum_tau));
}

const TransitionMatrix& NoiseProcess::matrix(KernelMode mode) const {
    switch (mode) {
        case KernelMode::mask: return mask_;
        case KernelMode::uniform: return uniform_;
        case KernelMode::blosum: return blosum_;
        case KernelMode::contextual: break;
    }
    throw Error("the contextual kernel has no static matrix");
}

LatentAlignment NoiseProcess::corrupt(const LatentAlignment& z0, int t, KernelMode mode, const HeadModel* model,
                                      Rng& rng) const {
    if (mode == KernelMode::contextual) {
        if (model == nullptr) return forward_noise(z0, t, schedule_, mask_, rng);
        if (model->residues() != residues()) throw Error("model alphabet does not match the noise process");
        return contextual_forward_noise(*model, z0, t, schedule_, config_.kernel, rng);
    }
    return forward_noise(z0, t, schedule_, matrix(mode), rng);
}

std::pair<ObservedSequence, HeadTargets> alignment_targets(const LatentAlignment& z0, const LatentAlignment& zt,
                                                           const Alphabet& alphabet) {
    if (z0.size() != zt.size()) throw Error("alignments differ in length");
    ObservedSequence x = collapse(zt, alphabet);
    const IndexMap imap = index_map(zt, alphabet);
    HeadTargets targets;
    targets.sub_target.assign(x.size(), -1);
    targets.del.assign(x.size(), 0);
    targets.ins.assign(x.size(), 0);
    const Token gap = alphabet.gap();
    for (std::size_t k = 0; k < x.size(); ++k) {
        const Token clean = z0.tokens[imap[k]];
        const Token noisy = zt.tokens[imap[k]];
        if (clean != gap && noisy != gap && clean != noisy) targets.sub_target[k] = clean;
        targets.del[k] = clean == gap ? 1 : 0;
        targets.ins[k] = next_nongap(z0, imap, k, alphabet).has_value() ? 1 : 0;
    }
    return {std::move(x), std::move(targets)};
}

std::optional<TrainingExample> make_training_example(const ObservedSequence& x0, const NoiseProcess& noise,
                                                     KernelMode mode, const HeadModel* model, LambdaMode lambda_mode,
                                                     std::size_t max_len, Rng& rng) {
    if (x0.empty()) throw EmptySequenceError("training sequence is empty");
    const Alphabet& alphabet = noise.alphabet();
    check_observed(x0, alphabet);
    constexpr int kAttempts = 3;
    for (int attempt = 0; attempt < kAttempts; ++attempt) {
        const int t = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(noise.schedule().steps)));
        LatentAlignment z0 = random_alignment(x0, alphabet, rng);
        LatentAlignment zt = noise.corrupt(z0, t, mode, model, rng);
        const std::size_t n = collapsed_length(zt, alphabet);
        if (n == 0 || n > max_len) continue;
        auto [x, targets] = alignment_targets(z0, zt, alphabet);
        TrainingExample out;
        out.example = LabeledExample{std::move(x), std::move(targets), lambda_weight(lambda_mode, t), t};
        out.z0 = std::move(z0);
        out.zt = std::move(zt);
        return out;
    }
    return std::nullopt;
}

void TrainingConfig::validate() const {
    model.validate();
    noise.kernel.validate();
    if (noise.steps < 1) throw Error("noise steps must be positive");
    if (steps < 0 || warmup_steps < 0 || warmup_steps > steps) throw Error("need 0 <= warmup_steps <= steps");
    if (batch_size < 1) throw Error("batch_size must be positive");
    if (!(lr > 0.0) || lr_floor < 0.0 || lr_floor > 1.0 || lr_warmup < 0) throw Error("invalid learning-rate schedule");
    if (weights.gamma_sub < 0 || weights.gamma_del < 0 || weights.gamma_ins < 0 ||
        weights.gamma_sub + weights.gamma_del + weights.gamma_ins <= 0) {
        throw Error("loss weights must be non-negative with at least one positive");
    }
}

DenoiserParams initial_params(const TrainingConfig& config) {
    config.validate();
    Rng rng(config.seed);
    Rng init(rng.split());
    return DenoiserParams::initialize(config.model, init);
}

TrainingResult train(const std::vector<ObservedSequence>& corpus, const TrainingConfig& config,
                     const std::function<void(const StepMetrics&)>& on_step) {
    config.validate();
    if (corpus.empty()) throw Error("training corpus is empty");
    const auto max_len = static_cast<std::size_t>(config.model.max_len);
    for (const auto& x : corpus) {
        if (x.empty()) throw EmptySequenceError("training corpus contains an empty sequence");
        if (x.size() > max_len) {
            throw Error("training sequence of length " + std::to_string(x.size()) + " exceeds max_len");
        }
    }
    const NoiseProcess noise(config.noise, config.model.residues);

    Rng rng(config.seed);
    Rng init(rng.split());
    Denoiser model(DenoiserParams::initialize(config.model, init));
    AdamState adam = AdamState::for_params(model.params());

    TrainingResult result;
    const auto batch = static_cast<std::size_t>(config.batch_size);
    std::vector<std::uint64_t> seeds(batch);
    std::vector<std::optional<TrainingExample>> drawn(batch);
    for (int step = 0; step < config.steps; ++step) {
        const KernelMode mode = step < config.warmup_steps ? KernelMode::mask : config.main_mode;
        for (auto& s : seeds) s = rng.split();
        const HeadModel* snapshot = mode == KernelMode::contextual ? &model : nullptr;
        parallel_for(batch, config.threads, [&](std::size_t i) {
            Rng ex(seeds[i]);
            const auto& x0 = corpus[ex.index(corpus.size())];
            drawn[i] = make_training_example(x0, noise, mode, snapshot, config.lambda_mode, max_len, ex);
        });
        TrainBatch examples;
        StepMetrics metrics;
        metrics.step = step;
        metrics.mode = mode;
        for (auto& d : drawn) {
            if (d) {
                examples.push_back(std::move(d->example));
            } else {
                ++metrics.skipped;
            }
        }
        result.skipped_examples += metrics.skipped;
        metrics.lr = learning_rate_at(step, config.steps, config.lr_warmup, config.lr, config.lr_floor);
        if (!examples.empty()) {
            auto [loss, grads] = loss_and_gradients(model, examples, config.weights, config.threads);
            metrics.loss = loss;
            apply_update(model.params(), grads, adam, metrics.lr);
        }
        if (on_step) on_step(metrics);
        result.metrics.push_back(metrics);
    }
    result.params = model.params();
    return result;
}

TrainBatch make_eval_batch(const std::vector<ObservedSequence>& sequences, const NoiseProcess& noise,
                           std::size_t max_len, std::uint64_t seed) {
    Rng rng(seed);
    TrainBatch batch;
    for (const auto& x : sequences) {
        auto ex = make_training_example(x, noise, KernelMode::mask, nullptr, LambdaMode::uniform, max_len, rng);
        if (ex) batch.push_back(std::move(ex->example));
    }
    return batch;
}

}  // namespace editdiff
