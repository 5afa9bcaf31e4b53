#include "editdiff/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "editdiff/blosum.hpp"
#include "editdiff/error.hpp"
#include "editdiff/kernels.hpp"
#include "editdiff/parallel.hpp"

namespace editdiff {
namespace {

Token sample_residue(const DenoiserOutput& out, std::size_t i, Rng& rng) {
    const auto probs = out.residue_probs(i);
    return static_cast<Token>(rng.categorical(probs));
}

}  // namespace

void SamplerConfig::validate() const {
    if (steps < 1) throw Error("sampler needs at least one step");
    if (!(tau_del > 0.0 && tau_del < 1.0) || !(tau_ins > 0.0 && tau_ins < 1.0)) {
        throw Error("indel thresholds must lie in (0, 1)");
    }
    if (blosum_tau <= 0.0) throw Error("blosum temperature must be positive");
    if (!start && init_length < 1) throw Error("initial length must be at least 1");
    if (start && start->empty()) throw Error("start sequence is empty");
    for (std::size_t f : frozen) {
        if (!start) throw Error("frozen positions need a start sequence");
        if (f >= start->size()) throw Error("frozen position " + std::to_string(f) + " is outside the start sequence");
    }
}

double kt_schedule(int t, int steps) {
    if (steps < 1 || t < 1 || t > steps) throw Error("kt_schedule needs 1 <= t <= T");
    return static_cast<double>(t - 1) / static_cast<double>(steps);
}

ObservedSequence init_from_prior(const HeadModel& model, std::size_t length, Rng& rng) {
    if (length < 1 || length > model.max_len()) {
        throw Error("initial length " + std::to_string(length) + " must lie in [1, " + std::to_string(model.max_len()) + "]");
    }
    ObservedSequence masks{std::vector<Token>(length, static_cast<Token>(model.residues()))};
    const DenoiserOutput out = model.forward(masks);
    ObservedSequence x;
    x.tokens.resize(length);
    for (std::size_t i = 0; i < length; ++i) x.tokens[i] = sample_residue(out, i, rng);
    return x;
}

Sampler::Sampler(const HeadModel& model, SamplerConfig config) : model_(model), config_(std::move(config)) {
    config_.validate();
    const int k = model_.residues();
    if (config_.renoise == KernelMode::blosum) {
        blosum_rows_ = blosum_substitution_kernel(blosum62().topLeftCorner(k, k), config_.blosum_tau);
    }
    if (config_.start) {
        for (Token tok : config_.start->tokens) {
            if (tok < 0 || tok > k) throw Error("start sequence holds a token outside the model vocabulary");
        }
        if (config_.start->size() > model_.max_len()) throw Error("start sequence exceeds the model max_len");
    }
}

SamplerState Sampler::initial_state(Rng& rng) const {
    SamplerState s;
    s.x = config_.start ? *config_.start : init_from_prior(model_, config_.init_length, rng);
    s.frozen.assign(s.x.size(), false);
    for (std::size_t f : config_.frozen) s.frozen[f] = true;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!s.frozen[i]) s.noisy.push_back(i);
    }
    return s;
}

StepRecord Sampler::step(SamplerState& state, int t, Rng& rng) const {
    StepRecord rec;
    rec.t = t;
    const Token mask = static_cast<Token>(model_.residues());
    const std::size_t n = state.x.size();
    const DenoiserOutput before = model_.forward(state.x);
    for (std::size_t i = 0; i < n; ++i) {
        rec.mean_p_del += sigmoid(before.del_logits(static_cast<Eigen::Index>(i)));
        rec.mean_p_ins += sigmoid(before.ins_logits(static_cast<Eigen::Index>(i)));
    }
    rec.mean_p_del /= static_cast<double>(n);
    rec.mean_p_ins /= static_cast<double>(n);

    std::vector<bool> in_noisy(n, false);
    for (std::size_t j : state.noisy) in_noisy[j] = true;

    // (1) delete, (2) insert, both read from the pre-step forward pass.
    std::vector<bool> remove(n, false), grow(n, false);
    if (config_.delete_steps.contains(t)) {
        for (std::size_t j : state.noisy) {
            if (!state.frozen[j] && sigmoid(before.del_logits(static_cast<Eigen::Index>(j))) > config_.tau_del) {
                remove[j] = true;
                rec.dels.push_back(j);
            }
        }
    }
    if (rec.dels.size() == n) {
        rec.dels.clear();
        rec.aborted = true;
        rec.seq = state.x;
        return rec;
    }
    std::size_t length = n - rec.dels.size();
    if (config_.insert_steps.contains(t)) {
        for (std::size_t j : state.noisy) {
            if (remove[j] || state.frozen[j]) continue;
            if (length >= model_.max_len()) break;
            if (sigmoid(before.ins_logits(static_cast<Eigen::Index>(j))) > config_.tau_ins) {
                grow[j] = true;
                ++length;
            }
        }
    }

    SamplerState next;
    next.x.tokens.reserve(length);
    next.frozen.reserve(length);
    for (std::size_t j = 0; j < n; ++j) {
        if (remove[j]) continue;
        const std::size_t pos = next.x.size();
        next.x.tokens.push_back(state.x[j]);
        next.frozen.push_back(state.frozen[j]);
        if (in_noisy[j]) next.noisy.push_back(pos);
        if (grow[j]) {
            rec.ins.push_back(pos + 1);
            next.x.tokens.push_back(mask);
            next.frozen.push_back(false);
            next.noisy.push_back(pos + 1);
        }
    }

    // (3) substitute every noisy position, then route the least confident.
    const bool edited = !rec.dels.empty() || !rec.ins.empty();
    const DenoiserOutput after = edited ? model_.forward(next.x) : before;
    for (std::size_t j : next.noisy) {
        const Token tok = sample_residue(after, j, rng);
        if (tok != next.x[j]) rec.subs.push_back({j, next.x[j], tok});
        next.x.tokens[j] = tok;
    }
    std::vector<std::size_t> candidates;
    std::vector<double> confidence(next.x.size(), 0.0);
    for (std::size_t j = 0; j < next.x.size(); ++j) {
        if (next.frozen[j]) continue;
        candidates.push_back(j);
        const Token tok = next.x[j];
        confidence[j] = tok < mask ? after.residue_probs(j)[static_cast<std::size_t>(tok)] : 0.0;
    }
    const auto keep = static_cast<std::size_t>(std::llround(kt_schedule(t, config_.steps) * static_cast<double>(candidates.size())));
    std::stable_sort(candidates.begin(), candidates.end(),
                     [&](std::size_t a, std::size_t b) { return confidence[a] < confidence[b]; });
    candidates.resize(std::min(keep, candidates.size()));
    std::sort(candidates.begin(), candidates.end());
    next.noisy = candidates;

    // (4) renoise the routed positions.
    if (!next.noisy.empty()) {
        const int k = model_.residues();
        std::optional<DenoiserOutput> ctx;
        if (config_.renoise == KernelMode::contextual) {
            ObservedSequence masked = next.x;
            for (std::size_t j : next.noisy) masked.tokens[j] = mask;
            ctx = model_.forward(masked);
        }
        for (std::size_t j : next.noisy) {
            Token tok = mask;
            switch (config_.renoise) {
                case KernelMode::mask: break;
                case KernelMode::uniform: tok = static_cast<Token>(rng.index(static_cast<std::size_t>(k))); break;
                case KernelMode::blosum: {
                    const Token src = next.x[j];
                    if (src < mask) {
                        const Eigen::VectorXd row = blosum_rows_.row(src).transpose();
                        tok = static_cast<Token>(rng.categorical({row.data(), static_cast<std::size_t>(row.size())}));
                    } else {
                        tok = static_cast<Token>(rng.index(static_cast<std::size_t>(k)));
                    }
                    break;
                }
                case KernelMode::contextual: tok = sample_residue(*ctx, j, rng); break;
            }
            next.x.tokens[j] = tok;
            rec.renoised.push_back(j);
            rec.renoise_tokens.push_back(tok);
        }
    }
    rec.seq = next.x;
    state = std::move(next);
    return rec;
}

Trajectory Sampler::generate(Rng& rng) const {
    Trajectory traj;
    SamplerState state = initial_state(rng);
    traj.mask = static_cast<Token>(model_.residues());
    traj.initial = state.x;
    for (int t = config_.steps; t >= 1; --t) traj.steps.push_back(step(state, t, rng));
    return traj;
}

std::vector<Trajectory> generate_many(const HeadModel& model, const SamplerConfig& config, std::size_t count,
                                      std::uint64_t seed, int threads) {
    const Sampler sampler(model, config);
    Rng root(seed);
    std::vector<std::uint64_t> seeds(count);
    for (auto& s : seeds) s = root.split();
    std::vector<Trajectory> out(count);
    parallel_for(count, threads, [&](std::size_t i) {
        Rng rng(seeds[i]);
        out[i] = sampler.generate(rng);
    });
    return out;
}

ObservedSequence apply_step(const ObservedSequence& x, const StepRecord& record, Token mask) {
    if (record.aborted) return x;
    ObservedSequence y;
    std::size_t d = 0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (d < record.dels.size() && record.dels[d] == j) {
            ++d;
            continue;
        }
        y.tokens.push_back(x[j]);
    }
    if (d != record.dels.size()) throw Error("deletion index outside the sequence");
    for (std::size_t p : record.ins) {
        if (p > y.size()) throw Error("insertion index outside the sequence");
        y.tokens.insert(y.tokens.begin() + static_cast<std::ptrdiff_t>(p), mask);
    }
    for (const auto& s : record.subs) {
        if (s.pos >= y.size()) throw Error("substitution index outside the sequence");
        y.tokens[s.pos] = s.after;
    }
    if (record.renoised.size() != record.renoise_tokens.size()) throw Error("renoise record is inconsistent");
    for (std::size_t i = 0; i < record.renoised.size(); ++i) {
        if (record.renoised[i] >= y.size()) throw Error("renoise index outside the sequence");
        y.tokens[record.renoised[i]] = record.renoise_tokens[i];
    }
    return y;
}

ObservedSequence replay(const Trajectory& trajectory) {
    ObservedSequence x = trajectory.initial;
    for (const auto& rec : trajectory.steps) {
        x = apply_step(x, rec, trajectory.mask);
        if (x != rec.seq) throw Error("trajectory replay diverged at t=" + std::to_string(rec.t));
    }
    return x;
}

}  // namespace editdiff
