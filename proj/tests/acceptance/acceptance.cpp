// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Usage: editdiff_acceptance [--workdir DIR] [--only N,...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "editdiff/blosum.hpp"
#include "editdiff/checkpoint.hpp"
#include "editdiff/cli.hpp"
#include "editdiff/denoiser.hpp"
#include "editdiff/error.hpp"
#include "editdiff/evolution.hpp"
#include "editdiff/io.hpp"
#include "editdiff/kernels.hpp"
#include "editdiff/profile.hpp"
#include "editdiff/sampler.hpp"
#include "editdiff/scoring.hpp"
#include "editdiff/training.hpp"
#include "oracles.hpp"

#ifndef EDITDIFF_TOY_CONFIG
#define EDITDIFF_TOY_CONFIG "configs/toy.cfg"
#endif

using namespace editdiff;
namespace fs = std::filesystem;

namespace {

// Toy family shared by criteria 7 to 10.
constexpr std::uint64_t kToySeed = 7;
constexpr std::size_t kToyLength = 100;
constexpr std::size_t kToyCorpus = 2000;
constexpr std::size_t kHeldOut = 64;
constexpr std::uint64_t kTrainSeed = 1;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

struct Cli {
    int code = 0;
    std::string out;
    std::string err;
};

Cli cli(std::vector<std::string> args) {
    args.insert(args.begin(), "editdiff");
    std::ostringstream out, err;
    Cli r;
    r.code = run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

Cli cli_ok(const std::vector<std::string>& args) {
    Cli r = cli(args);
    if (r.code != 0) {
        std::string joined;
        for (const auto& a : args) joined += a + " ";
        throw std::runtime_error("command failed: " + joined + ": " + r.err);
    }
    return r;
}

std::string bytes_of(const std::string& path) { return read_text_file(path); }

// ---------------------------------------------------------------------------
// 1. Column sums over a parameter grid, and the masked / uniform reductions
// against enumerated marginals.

using Joint = std::map<std::vector<Token>, double>;

// Exact law of z_t for the two reductions, written from their definitions:
// each residue slot independently stays with alpha_bar and otherwise becomes
// mask (masked diffusion) or a uniform residue (uniform diffusion); gap slots
// never change.
Joint reduction_law(const std::vector<Token>& z0, int k, double abar, bool masked) {
    Joint law{{{}, 1.0}};
    const Token gap = k + 1;
    for (Token tok : z0) {
        std::map<Token, double> slot;
        if (tok == gap) {
            slot[gap] = 1.0;
        } else if (masked) {
            slot[tok] = abar;
            slot[k] += 1.0 - abar;
        } else {
            for (Token r = 0; r < k; ++r) slot[r] = (1.0 - abar) / k;
            slot[tok] += abar;
        }
        Joint next;
        for (const auto& [prefix, p] : law) {
            for (const auto& [v, q] : slot) {
                auto z = prefix;
                z.push_back(v);
                next[z] += p * q;
            }
        }
        law = std::move(next);
    }
    return law;
}

Outcome criterion_kernels() {
    std::size_t matrices = 0;
    double worst_sum = 0.0;
    for (int k : {2, 3, 5, 20}) {
        const Eigen::MatrixXd scores = blosum62().topLeftCorner(k, k);
        for (double od : {0.0, 0.05, 0.1, 0.5, 1.0})
            for (double oi : {0.0, 0.05, 0.1, 0.5, 1.0})
                for (double rho : {0.0, 0.25, 0.5, 1.0})
                    for (int sub = 0; sub < 3; ++sub) {
                        StochasticMatrix s = sub == 0 ? uniform_substitution_kernel(k)
                                             : sub == 1 ? blosum_transition_kernel(scores, 2.0)
                                                        : blosum_transition_kernel(scores, 0.3);
                        const auto q = build_transition_matrix({od, oi, rho}, s).q;
                        for (Eigen::Index c = 0; c < q.cols(); ++c) {
                            worst_sum = std::max(worst_sum, std::abs(q.col(c).sum() - 1.0));
                            if (q.col(c).minCoeff() < 0.0) worst_sum = 1.0;
                        }
                        ++matrices;
                    }
    }
    bool ok = worst_sum < 1e-9;

    const int k = 3, steps = 10, samples = 100000;
    const auto schedule = linear_schedule(steps);
    const Alphabet a = Alphabet::with_size(k);
    const auto mask_q = build_transition_matrix({0.0, 0.0, 1.0}, uniform_substitution_kernel(k));
    const auto unif_q = build_transition_matrix({0.0, 0.0, 0.0}, uniform_substitution_kernel(k));
    Rng rng(11);
    double min_p = 1.0;
    int tests = 0;
    for (std::size_t len = 1; len <= 4; ++len) {
        ObservedSequence x;
        for (std::size_t i = 0; i < len; ++i) x.tokens.push_back(static_cast<Token>(rng.index(k)));
        const LatentAlignment z0 = random_alignment(x, a, rng);
        for (int t : {3, 7}) {
            for (bool masked : {true, false}) {
                const Joint law = reduction_law(z0.tokens, k, schedule.at(t), masked);
                std::map<std::vector<Token>, double> counts;
                for (int i = 0; i < samples; ++i) {
                    counts[forward_noise(z0, t, schedule, masked ? mask_q : unif_q, rng).tokens] += 1;
                }
                std::vector<double> c, p;
                for (const auto& [z, prob] : law) {
                    c.push_back(counts.count(z) ? counts[z] : 0.0);
                    p.push_back(prob);
                    counts.erase(z);
                }
                if (!counts.empty()) ok = false;  // an outcome outside the law's support
                const auto [stat, dof] = oracle::chi_square(c, p);
                const double pv = oracle::chi_square_p(stat, dof);
                min_p = std::min(min_p, pv);
                ok = ok && pv > 0.01;
                ++tests;
            }
        }
    }
    return {ok, std::to_string(matrices) + " matrices, max |colsum-1| " + fmt("%.1e", worst_sum) + "; " +
                    std::to_string(tests) + " reduction tests, min p " + fmt("%.3f", min_p)};
}

// ---------------------------------------------------------------------------
// 2. Expected collapsed length.

Outcome criterion_length() {
    const std::size_t len = 100;
    const int steps = 100, draws = 10000;
    const auto schedule = linear_schedule(steps);
    const Alphabet a;
    Rng rng(21);
    ObservedSequence x;
    for (std::size_t i = 0; i < len; ++i) x.tokens.push_back(static_cast<Token>(rng.index(20)));
    bool ok = true;
    double worst = 0.0;
    const std::vector<std::pair<double, double>> settings = {{0.1, 0.1}, {0.3, 0.05}, {0.05, 0.25}};
    for (const auto& [oi, od] : settings) {
        const auto q = build_transition_matrix({od, oi, 0.5}, uniform_substitution_kernel(20));
        for (int t : {30, 70, 100}) {
            double total = 0.0;
            for (int i = 0; i < draws; ++i) {
                const auto zt = forward_noise(random_alignment(x, a, rng), t, schedule, q, rng);
                total += static_cast<double>(collapse(zt, a).size());
            }
            const double expected = len * (1.0 + (1.0 - schedule.at(t)) * (oi - od));
            const double rel = std::abs(total / draws - expected) / expected;
            worst = std::max(worst, rel);
            ok = ok && rel < 0.02;
        }
    }
    return {ok, "3 settings x 3 levels, worst relative error " + fmt("%.4f", worst)};
}

// ---------------------------------------------------------------------------
// 3. Gradients against central differences.

double max_relative_gradient_error(std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    DenoiserParams params = oracle::random_params(gen);
    const auto& c = params.config();
    TrainBatch batch;
    for (int i = 0; i < 2; ++i) batch.push_back(oracle::random_example(gen, c.residues, 6));
    std::uniform_real_distribution<double> gamma(0.1, 1.0);
    const HeadWeights w{gamma(gen), gamma(gen), gamma(gen)};
    const auto [loss, grad] = loss_and_gradients(Denoiser(params), batch, w);
    const double h = 1e-4;
    auto loss_at = [&](std::size_t i, double delta) {
        DenoiserParams shifted = params;
        shifted.values()[i] += delta;
        return evaluate_loss(Denoiser(shifted), batch, w).total;
    };
    double worst = 0.0;
    for (std::size_t i = 0; i < params.count(); ++i) {
        const double numeric =
            (-loss_at(i, 2 * h) + 8 * loss_at(i, h) - 8 * loss_at(i, -h) + loss_at(i, -2 * h)) / (12 * h);
        worst = std::max(worst,
                         std::abs(numeric - grad[i]) / std::max({std::abs(numeric), std::abs(grad[i]), 1e-6}));
    }
    return worst;
}

Outcome criterion_gradients() {
    double worst = 0.0;
    for (std::uint64_t seed = 101; seed < 121; ++seed) worst = std::max(worst, max_relative_gradient_error(seed));
    return {worst < 1e-4, "20 configurations, max relative error " + fmt("%.2e", worst)};
}

// ---------------------------------------------------------------------------
// 4. log sigmoid(l) - log sigmoid(-l) = l, and the indel score built on it.

class ConstantHeads final : public HeadModel {
public:
    explicit ConstantHeads(std::vector<double> del) : del_(std::move(del)) {}
    int residues() const override { return 20; }
    std::size_t max_len() const override { return 64; }
    DenoiserOutput forward(const ObservedSequence& x) const override {
        DenoiserOutput out;
        const auto n = static_cast<Eigen::Index>(x.size());
        out.sub_logits = RowMatrix::Zero(n, 21);
        out.del_logits = Eigen::VectorXd::Map(del_.data(), n);
        out.ins_logits = Eigen::VectorXd::Zero(n);
        return out;
    }

private:
    std::vector<double> del_;
};

Outcome criterion_identity() {
    std::mt19937_64 gen(41);
    std::uniform_real_distribution<double> u(-40.0, 40.0);
    double worst = 0.0;
    std::vector<double> logits(10000);
    for (double& l : logits) {
        l = u(gen);
        worst = std::max(worst, std::abs(log_sigmoid(l) - log_sigmoid(-l) - l));
    }
    // A deletion scores exactly its logit.
    std::vector<double> del(logits.begin(), logits.begin() + 50);
    const ConstantHeads model(del);
    const ObservedSequence wt{std::vector<Token>(50, 3)};
    double worst_score = 0.0;
    for (std::size_t i = 0; i < 50; ++i) {
        worst_score = std::max(worst_score, std::abs(indel_score(model, wt, {EditOp::remove(i + 1, 3)}) - del[i]));
    }
    return {worst < 1e-12 && worst_score < 1e-12,
            "10^4 logits, max deviation " + fmt("%.1e", worst) + ", deletion score vs logit " + fmt("%.1e", worst_score)};
}

// ---------------------------------------------------------------------------
// 5. BLOSUM temperature limits.

Outcome criterion_blosum() {
    const auto hot = blosum_substitution_kernel(blosum62(), 1e4);
    const double sup = (hot.array() - 1.0 / 20.0).abs().maxCoeff();
    const auto cold = blosum_substitution_kernel(blosum62(), 0.1);
    bool diag = true;
    for (Eigen::Index i = 0; i < 20; ++i) {
        Eigen::Index arg = 0;
        cold.row(i).maxCoeff(&arg);
        diag = diag && arg == i;
        for (Eigen::Index j = 0; j < 20; ++j) diag = diag && (j == i || cold(i, j) < cold(i, i));
    }
    return {sup < 1e-3 && diag, "sup-norm to uniform at tau 1e4: " + fmt("%.2e", sup) +
                                    (diag ? ", strict diagonal argmax at tau 0.1" : ", diagonal argmax fails at tau 0.1")};
}

// ---------------------------------------------------------------------------
// 6. Target construction against enumeration.

Outcome criterion_targets() {
    const int k = 3;
    const Alphabet a = Alphabet::with_size(k);
    const Token g = a.gap();
    std::size_t checked = 0, mismatches = 0, empties = 0;
    for (std::size_t len = 1; len <= 3; ++len) {
        std::vector<Token> x(len, 0);
        for (;;) {
            for (const auto& z0 : oracle::all_alignments(x, g)) {
                std::vector<Token> zt(z0.size());
                std::function<void(std::size_t)> rec = [&](std::size_t j) {
                    if (j == z0.size()) {
                        const auto want = oracle::direct_targets(z0, zt, g);
                        if (want.x.empty()) {
                            try {
                                (void)alignment_targets(LatentAlignment{z0}, LatentAlignment{zt}, a);
                                ++mismatches;
                            } catch (const EmptySequenceError&) {
                                ++empties;
                            }
                            return;
                        }
                        const auto [got_x, got] = alignment_targets(LatentAlignment{z0}, LatentAlignment{zt}, a);
                        bool same = got_x.tokens == want.x && got.size() == want.x.size();
                        for (std::size_t i = 0; same && i < want.x.size(); ++i) {
                            same = got.sub_target[i] == want.sub[i] && got.del[i] == want.del[i] &&
                                   got.ins[i] == want.ins[i];
                        }
                        if (!same) ++mismatches;
                        ++checked;
                        return;
                    }
                    for (Token v = 0; v <= k + 1; ++v) {
                        if (z0[j] == g && v == k) continue;  // gaps never become mask
                        zt[j] = v;
                        rec(j + 1);
                    }
                };
                rec(0);
            }
            std::size_t i = 0;
            while (i < len && ++x[i] == k) x[i++] = 0;
            if (i == len) break;
        }
    }

    // Sampled examples from every kernel mode agree with the same definition.
    NoiseConfig nc;
    nc.steps = 10;
    const NoiseProcess noise(nc, k);
    Rng rng(61);
    std::size_t sampled = 0;
    for (const ObservedSequence& x0 : {ObservedSequence{{0}}, ObservedSequence{{1, 2}}, ObservedSequence{{2, 0, 1}}}) {
        for (KernelMode mode : {KernelMode::mask, KernelMode::uniform, KernelMode::blosum, KernelMode::contextual}) {
            for (int i = 0; i < 2000; ++i) {
                const auto ex = make_training_example(x0, noise, mode, nullptr, LambdaMode::uniform, 16, rng);
                if (!ex) continue;
                const auto want = oracle::direct_targets(ex->z0.tokens, ex->zt.tokens, g);
                const auto& got = ex->example.targets;
                bool same = collapse(ex->z0, a) == x0 && ex->example.input.tokens == want.x;
                for (std::size_t j = 0; same && j < want.x.size(); ++j) {
                    same = got.sub_target[j] == want.sub[j] && got.del[j] == want.del[j] && got.ins[j] == want.ins[j];
                }
                if (!same) ++mismatches;
                ++sampled;
            }
        }
    }
    return {mismatches == 0 && checked > 0,
            std::to_string(checked) + " enumerated pairs (" + std::to_string(empties) + " empty collapses), " +
                std::to_string(sampled) + " sampled examples, " + std::to_string(mismatches) + " mismatches"};
}

// ---------------------------------------------------------------------------
// 7 to 10 share one toy family and one trained model.

struct Toy {
    fs::path dir;
    std::string corpus, profile_path, checkpoint, metrics;
    ProfileModel profile;
    std::vector<ObservedSequence> train;
    TrainingConfig config;
    std::optional<Denoiser> model;
    double train_seconds = 0.0;
};

std::string path_in(const Toy& toy, const std::string& name) { return (toy.dir / name).string(); }

void prepare_toy(Toy& toy) {
    toy.corpus = path_in(toy, "toy.fa");
    toy.profile_path = path_in(toy, "toy_profile.json");
    toy.checkpoint = path_in(toy, "toy.ckpt");
    toy.metrics = path_in(toy, "toy_metrics.jsonl");
    cli_ok({"--seed", std::to_string(kToySeed), "toygen", "--length", std::to_string(kToyLength), "--n",
            std::to_string(kToyCorpus), "--core-fraction", "0.5", "--mean-del", "0.01", "--mean-ins", "0.01", "--out",
            toy.corpus, "--profile-out", toy.profile_path});
    toy.profile = parse_profile_json(read_text_file(toy.profile_path));
    for (auto& r : parse_fasta(read_text_file(toy.corpus), Alphabet())) toy.train.push_back(std::move(r.sequence));
    apply_training_keys(toy.config, parse_key_values(read_text_file(EDITDIFF_TOY_CONFIG)));

    const auto t0 = std::chrono::steady_clock::now();
    cli_ok({"--seed", std::to_string(kTrainSeed), "--config", EDITDIFF_TOY_CONFIG, "train", "--corpus", toy.corpus,
            "--out", toy.checkpoint, "--metrics", toy.metrics});
    toy.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    toy.model.emplace(load_checkpoint(toy.checkpoint));
}

Outcome criterion_training(Toy& toy) {
    prepare_toy(toy);
    const Denoiser& model = *toy.model;
    const Alphabet a;

    // Held-out loss on a fixed mask-kernel batch of fresh family members.
    Rng held_rng(kToySeed + 1000);
    std::vector<ObservedSequence> held;
    for (std::size_t i = 0; i < kHeldOut; ++i) held.push_back(sample_sequence(toy.profile, held_rng));
    TrainingConfig start_cfg = toy.config;
    start_cfg.seed = kTrainSeed;
    const NoiseProcess noise(toy.config.noise, toy.config.model.residues);
    const TrainBatch eval = make_eval_batch(held, noise, model.max_len(), 99);
    const double l0 = evaluate_loss(Denoiser(initial_params(start_cfg)), eval, toy.config.weights).total;
    const double l1 = evaluate_loss(model, eval, toy.config.weights).total;
    const double drop = 1.0 - l1 / l0;

    // Learned prior: the all-mask prediction averaged over positions.
    const std::size_t prior_len = kToyLength;
    const DenoiserOutput prior_out = model.forward(ObservedSequence{std::vector<Token>(prior_len, a.mask())});
    std::vector<double> prior(20, 0.0), unigram(20, 0.0);
    for (std::size_t i = 0; i < prior_len; ++i) {
        const auto row = prior_out.sub_logits.row(static_cast<Eigen::Index>(i)).head(20);
        const double mx = row.maxCoeff();
        const Eigen::ArrayXd e = (row.array() - mx).exp();
        for (int r = 0; r < 20; ++r) prior[static_cast<std::size_t>(r)] += e(r) / e.sum() / prior_len;
    }
    double n_tokens = 0.0;
    for (const auto& x : toy.train) {
        for (Token t : x.tokens) unigram[static_cast<std::size_t>(t)] += 1.0;
        n_tokens += static_cast<double>(x.size());
    }
    double kl = 0.0;
    for (int r = 0; r < 20; ++r) {
        const double p = prior[static_cast<std::size_t>(r)], q = unigram[static_cast<std::size_t>(r)] / n_tokens;
        if (p > 0.0) kl += p * std::log(p / q);
    }

    // 200 single mutants of a fresh family member.
    Rng mut_rng(kToySeed + 2000);
    const ObservedSequence wt = sample_sequence(toy.profile, mut_rng);
    const double base = loglik(toy.profile, wt);
    const DenoiserOutput wt_out = model.forward(wt);
    std::vector<double> scores, truth;
    std::set<std::pair<std::size_t, Token>> seen;
    while (scores.size() < 200) {
        const std::size_t pos = mut_rng.index(wt.size());
        const auto to = static_cast<Token>(mut_rng.index(20));
        if (to == wt[pos] || !seen.insert({pos, to}).second) continue;
        ObservedSequence mut = wt;
        mut.tokens[pos] = to;
        scores.push_back(substitution_score(wt_out, wt, {{pos + 1, wt[pos], to}}));
        truth.push_back(loglik(toy.profile, mut) - base);
    }
    const double rho = spearman(scores, truth);

    const bool ok = drop >= 0.30 && kl < 0.05 && rho > 0.5 && toy.train_seconds <= 900.0;
    return {ok, "held-out loss " + fmt("%.2f", l0) + " -> " + fmt("%.2f", l1) + " (drop " + fmt("%.3f", drop) +
                    "), prior KL " + fmt("%.4f", kl) + ", spearman " + fmt("%.3f", rho) + ", training " +
                    fmt("%.0f", toy.train_seconds) + " s"};
}

Outcome criterion_sampler(const Toy& toy) {
    const Denoiser& model = *toy.model;
    SamplerConfig cfg;
    cfg.init_length = 100;
    const auto runs = generate_many(model, cfg, 100, 81, 0);
    std::vector<double> dev;
    double early = 0.0, late = 0.0;
    std::size_t replayed = 0, complete = 0;
    const std::size_t quarter = static_cast<std::size_t>(cfg.steps) / 4;
    for (const auto& tr : runs) {
        dev.push_back(std::abs(static_cast<double>(tr.final_sequence().size()) - 100.0) / 100.0);
        const std::size_t n = tr.steps.size();
        if (n == static_cast<std::size_t>(cfg.steps)) {
            ++complete;
            for (std::size_t s = 0; s < quarter; ++s) {
                early += tr.steps[s].mean_p_del + tr.steps[s].mean_p_ins;
                late += tr.steps[n - 1 - s].mean_p_del + tr.steps[n - 1 - s].mean_p_ins;
            }
        }
        try {
            if (replay(tr) == tr.final_sequence()) ++replayed;
        } catch (const Error&) {
        }
    }
    std::nth_element(dev.begin(), dev.begin() + 50, dev.end());
    const double median_hi = dev[50];
    std::nth_element(dev.begin(), dev.begin() + 49, dev.end());
    const double median = 0.5 * (dev[49] + median_hi);
    const double norm = 2.0 * static_cast<double>(quarter) * static_cast<double>(std::max<std::size_t>(complete, 1));
    const bool ok = median <= 0.25 && early > late && replayed == runs.size();
    return {ok, "median length deviation " + fmt("%.3f", median) + ", indel probability first quarter " +
                    fmt("%.5f", early / norm) + " vs last " + fmt("%.5f", late / norm) + ", replayed " +
                    std::to_string(replayed) + "/100"};
}

// A family member that passes the filter, to start the searches from.
ObservedSequence evolution_template(const ProfileOracle& oracle, Rng& rng) {
    for (int i = 0; i < 1000; ++i) {
        ObservedSequence x = sample_sequence(oracle.profile(), rng);
        if (oracle.accept(x)) return x;
    }
    throw Error("no family member passes the filter");
}

Outcome criterion_evolution(const Toy& toy) {
    const ProfileOracle oracle(toy.profile);
    Rng rng(kToySeed + 3000);
    bool monotone = true, improved = true, protected_ok = true;
    double model_total = 0.0, uniform_total = 0.0;
    const int runs = 3;
    for (int run = 0; run < runs; ++run) {
        const ObservedSequence templ = evolution_template(oracle, rng);
        const auto protect = oracle.core_sites(templ);
        for (Proposer proposer : {Proposer::model, Proposer::uniform}) {
            EvolveConfig cfg;  // T = 20, w = 100, b = 10, parents retained
            cfg.proposer = proposer;
            cfg.seed = 500 + static_cast<std::uint64_t>(run);
            cfg.threads = 0;
            const auto r = evolve(templ, protect, cfg, oracle, &*toy.model, 20);
            double prev = r.template_score;
            for (const auto& h : r.history) {
                monotone = monotone && h.best_score >= prev;
                prev = h.best_score;
            }
            improved = improved && r.beam.front().score > r.template_score;
            for (const auto& c : r.beam) {
                // Substitution-only search keeps coordinates, so protected
                // sites must still hold the template residue.
                for (std::size_t p : protect) protected_ok = protected_ok && c.seq[p] == templ[p];
            }
            (proposer == Proposer::model ? model_total : uniform_total) += r.beam.front().score - r.template_score;
        }
    }
    const bool ok = monotone && improved && protected_ok && model_total > uniform_total;
    return {ok, std::string(monotone ? "monotone" : "NOT monotone") + ", " + (improved ? "improved" : "NOT improved") +
                    ", " + (protected_ok ? "core kept" : "core changed") + "; mean gain model " +
                    fmt("%.2f", model_total / runs) + " vs uniform " + fmt("%.2f", uniform_total / runs)};
}

Outcome criterion_determinism(const Toy& toy) {
    std::vector<std::string> failures;
    auto same = [&](const std::string& what, const std::string& x, const std::string& y) {
        if (x != y || x.empty()) failures.push_back(what);
    };

    // train: a short run twice, single- and multi-threaded.
    const std::string short_cfg = path_in(toy, "short.cfg");
    KeyValues kv = parse_key_values(read_text_file(EDITDIFF_TOY_CONFIG));
    kv["steps"] = "20";
    kv["warmup_steps"] = "10";
    write_text_file(short_cfg, write_key_values(kv));
    for (const char* threads : {"1", "3"}) {
        cli_ok({"--seed", "5", "--threads", threads, "--config", short_cfg, "train", "--corpus", toy.corpus, "--out",
                path_in(toy, std::string("short") + threads + ".ckpt"), "--metrics",
                path_in(toy, std::string("short") + threads + ".jsonl")});
    }
    same("train checkpoint", bytes_of(path_in(toy, "short1.ckpt")), bytes_of(path_in(toy, "short3.ckpt")));
    same("train metrics", bytes_of(path_in(toy, "short1.jsonl")), bytes_of(path_in(toy, "short3.jsonl")));

    // generate
    std::vector<std::string> gen_out;
    for (const char* threads : {"1", "3"}) {
        const std::string tag = std::string("gen") + threads;
        gen_out.push_back(cli_ok({"--seed", "9", "--threads", threads, "generate", "--checkpoint", toy.checkpoint,
                                  "--len", "40", "60", "--n", "3", "--sample-steps", "30", "--trajectories",
                                  path_in(toy, tag + ".jsonl")})
                              .out);
    }
    same("generate FASTA", gen_out[0], gen_out[1]);
    same("generate trajectories", bytes_of(path_in(toy, "gen1.jsonl")), bytes_of(path_in(toy, "gen3.jsonl")));
    const auto trajs = parse_trajectory_jsonl(bytes_of(path_in(toy, "gen1.jsonl")), Alphabet());
    const auto gen_records = parse_fasta(gen_out[0], Alphabet());
    bool replay_ok = trajs.size() == gen_records.size();
    for (std::size_t i = 0; replay_ok && i < trajs.size(); ++i) replay_ok = replay(trajs[i]) == gen_records[i].sequence;
    if (!replay_ok) failures.push_back("trajectory replay");

    // score
    const Alphabet a;
    const ObservedSequence wt = toy.train.front();
    write_text_file(path_in(toy, "wt.fa"), write_fasta({{"wt", "", wt}}, a));
    std::vector<MutationRow> rows;
    Rng rng(3);
    for (int i = 0; i < 30; ++i) {
        const std::size_t pos = rng.index(wt.size());
        Token to = static_cast<Token>(rng.index(19));
        if (to >= wt[pos]) ++to;
        rows.push_back({format_point_mutations({{pos + 1, wt[pos], to}}, a), std::nullopt});
    }
    write_text_file(path_in(toy, "muts.csv"), write_mutation_csv(rows, "value"));
    const std::vector<std::string> score_args = {"score", "--checkpoint", toy.checkpoint, "--wt", path_in(toy, "wt.fa"),
                                                 "--mutations", path_in(toy, "muts.csv")};
    auto with_threads = [](std::vector<std::string> args, const char* threads) {
        args.insert(args.begin(), {"--threads", threads});
        return args;
    };
    same("score", cli_ok(with_threads(score_args, "1")).out, cli_ok(with_threads(score_args, "3")).out);

    // evolve
    std::string templ_text;
    {
        const ProfileOracle oracle(toy.profile);
        Rng trng(kToySeed + 4000);
        templ_text = write_fasta({{"template", "", evolution_template(oracle, trng)}}, a);
    }
    write_text_file(path_in(toy, "template.fa"), templ_text);
    std::vector<std::string> evo_out;
    for (const char* threads : {"1", "3"}) {
        const std::string tag = std::string("evo") + threads;
        evo_out.push_back(cli_ok({"--seed", "2", "--threads", threads, "evolve", "--checkpoint", toy.checkpoint,
                                  "--profile", toy.profile_path, "--template", path_in(toy, "template.fa"),
                                  "--iterations", "5", "--history", path_in(toy, tag + ".jsonl")})
                              .out);
    }
    same("evolve beam", evo_out[0], evo_out[1]);
    same("evolve history", bytes_of(path_in(toy, "evo1.jsonl")), bytes_of(path_in(toy, "evo3.jsonl")));

    // Round trips: re-serializing parsed output reproduces the bytes.
    const auto ckpt = bytes_of(toy.checkpoint);
    const auto reloaded = serialize_checkpoint(load_checkpoint(toy.checkpoint));
    same("checkpoint round trip", ckpt, std::string(reloaded.begin(), reloaded.end()));
    same("FASTA round trip", gen_out[0], write_fasta(gen_records, a));
    {
        const std::string text = bytes_of(toy.corpus);
        same("corpus FASTA round trip", text, write_fasta(parse_fasta(text, a), a));
    }
    {
        std::string again;
        for (std::size_t i = 0; i < trajs.size(); ++i) again += trajectory_jsonl(trajs[i], i, a);
        same("trajectory round trip", bytes_of(path_in(toy, "gen1.jsonl")), again);
    }
    {
        const std::string text = bytes_of(toy.metrics);
        std::string again;
        std::istringstream lines(text);
        for (std::string line; std::getline(lines, line);) again += metrics_json_line(parse_metrics_json_line(line)) + "\n";
        same("metrics round trip", text, again);
    }
    {
        const std::string text = bytes_of(path_in(toy, "evo1.jsonl"));
        std::string again;
        std::istringstream lines(text);
        for (std::string line; std::getline(lines, line);) again += history_json_line(parse_history_json_line(line)) + "\n";
        same("history round trip", text, again);
    }
    {
        const std::string text = bytes_of(toy.profile_path);
        same("profile round trip", text, profile_json(parse_profile_json(text), a));
    }
    {
        const std::string scored = cli_ok(score_args).out;
        same("score CSV round trip", scored, write_mutation_csv(parse_mutation_csv(scored)));
        same("mutation CSV round trip", bytes_of(path_in(toy, "muts.csv")),
             write_mutation_csv(parse_mutation_csv(bytes_of(path_in(toy, "muts.csv"))), "value"));
    }
    {
        const std::string text = read_text_file(short_cfg);
        same("config round trip", text, write_key_values(parse_key_values(text)));
        TrainingConfig c;
        apply_training_keys(c, parse_key_values(text));
        same("training keys round trip", write_key_values(training_keys(c)),
             write_key_values(training_keys([&] {
                 TrainingConfig d;
                 apply_training_keys(d, training_keys(c));
                 return d;
             }())));
    }
    {
        const std::string text = cli_ok({"kernel", "--blosum", "--k", "20"}).out;
        std::vector<std::string> labels;
        const Eigen::MatrixXd m = parse_matrix_csv(text, &labels);
        same("matrix CSV round trip", text, matrix_csv(m, labels));
    }

    std::string detail = "train/generate/score/evolve byte-identical across runs and thread counts; 11 formats round-trip";
    if (!failures.empty()) {
        detail = "mismatch:";
        for (const auto& f : failures) detail += " [" + f + "]";
    }
    return {failures.empty(), detail};
}

struct Criterion {
    int id;
    std::string name;
    double budget_seconds;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    fs::path workdir = fs::temp_directory_path() / "editdiff_acceptance";
    std::set<int> only;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--workdir" && i + 1 < argc) {
            workdir = argv[++i];
        } else if (arg == "--only" && i + 1 < argc) {
            std::stringstream ss(argv[++i]);
            for (std::string item; std::getline(ss, item, ',');) only.insert(std::stoi(item));
        } else {
            std::cerr << "usage: editdiff_acceptance [--workdir DIR] [--only N,...]\n";
            return 2;
        }
    }
    fs::remove_all(workdir);
    fs::create_directories(workdir);

    Toy toy;
    toy.dir = workdir;
    auto need_toy = [&] {
        if (!toy.model) prepare_toy(toy);
    };

    const std::vector<Criterion> criteria = {
        {1, "kernel stochasticity and reductions", 60, criterion_kernels},
        {2, "expected-length law", 60, criterion_length},
        {3, "gradient correctness", 120, criterion_gradients},
        {4, "indel-score identity", 1, criterion_identity},
        {5, "BLOSUM temperature limits", 1, criterion_blosum},
        {6, "target construction vs enumeration", 60, criterion_targets},
        {7, "end-to-end toy training", 900, [&] { return criterion_training(toy); }},
        {8, "sampler behaviour", 300,
         [&] {
             need_toy();
             return criterion_sampler(toy);
         }},
        {9, "directed evolution", 600,
         [&] {
             need_toy();
             return criterion_evolution(toy);
         }},
        {10, "determinism and formats", 120,
         [&] {
             need_toy();
             return criterion_determinism(toy);
         }},
    };

    int failed = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && !only.count(c.id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        // Criterion 7 also times the training run; its budget covers training.
        if (c.id != 7 && secs > c.budget_seconds) {
            o.pass = false;
            o.detail += "; over the " + fmt("%.0f", c.budget_seconds) + " s budget";
        }
        if (!o.pass) ++failed;
        std::printf("[%s] %2d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name.c_str(), o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%d criteria failed\n", failed);
    return failed == 0 ? 0 : 1;
}
