#pragma once

#include <array>
#include <climits>
#include <cstdint>
#include <optional>
#include <vector>

#include "editdiff/model.hpp"
#include "editdiff/training.hpp"

namespace editdiff {

/// Inclusive range of timesteps at which an edit type is allowed.
struct StepRange {
    int first = 1;
    int last = INT_MAX;

    bool contains(int t) const { return first <= t && t <= last; }
    static StepRange never() { return {1, 0}; }
};

struct SamplerConfig {
    int steps = 100;
    double tau_del = 0.7;
    double tau_ins = 0.7;
    KernelMode renoise = KernelMode::contextual;
    double blosum_tau = 2.0;
    std::size_t init_length = 100;
    StepRange delete_steps;
    StepRange insert_steps;
    /// Start from this sequence instead of the learned prior.
    std::optional<ObservedSequence> start;
    /// Positions of the start sequence that are never edited.
    std::vector<std::size_t> frozen;

    void validate() const;
};

/// k_t = (t-1)/T: fraction of positions kept noisy after step t.
double kt_schedule(int t, int steps);

struct Substitution {
    std::size_t pos = 0;
    Token before = 0;
    Token after = 0;
};

/// Edits of one denoising step. Deletions are indices into the sequence
/// before the step; insertions are the final positions of the new mask
/// tokens after deletions and insertions; substitutions and renoising are
/// positions in the edited sequence.
struct StepRecord {
    int t = 0;
    ObservedSequence seq;  ///< sequence after the step
    std::vector<std::size_t> dels;
    std::vector<std::size_t> ins;
    std::vector<Substitution> subs;
    std::vector<std::size_t> renoised;
    std::vector<Token> renoise_tokens;
    double mean_p_del = 0.0;
    double mean_p_ins = 0.0;
    bool aborted = false;
};

struct Trajectory {
    Token mask = 20;  ///< mask id (K), the placeholder for inserted tokens
    ObservedSequence initial;
    std::vector<StepRecord> steps;

    const ObservedSequence& final_sequence() const { return steps.empty() ? initial : steps.back().seq; }
};

/// Sequence state carried between steps.
struct SamplerState {
    ObservedSequence x;
    std::vector<std::size_t> noisy;  ///< ascending indices pending update
    std::vector<bool> frozen;        ///< per position
};

/// Samples L positions independently from the model's all-mask prediction.
ObservedSequence init_from_prior(const HeadModel& model, std::size_t length, Rng& rng);

class Sampler {
public:
    Sampler(const HeadModel& model, SamplerConfig config);

    SamplerState initial_state(Rng& rng) const;
    /// One delete/insert/substitute/renoise step at level t (T..1).
    StepRecord step(SamplerState& state, int t, Rng& rng) const;
    Trajectory generate(Rng& rng) const;

    const SamplerConfig& config() const { return config_; }

private:
    const HeadModel& model_;
    SamplerConfig config_;
    Eigen::MatrixXd blosum_rows_;
};

/// Independent generations with per-task streams derived from `seed`.
std::vector<Trajectory> generate_many(const HeadModel& model, const SamplerConfig& config, std::size_t count,
                                      std::uint64_t seed, int threads);

/// Applies one record's edits to `x`.
ObservedSequence apply_step(const ObservedSequence& x, const StepRecord& record, Token mask);
/// Replays every step from the initial sequence; throws if a snapshot disagrees.
ObservedSequence replay(const Trajectory& trajectory);

}  // namespace editdiff
