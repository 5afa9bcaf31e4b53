#include "editdiff/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "editdiff/blosum.hpp"
#include "editdiff/checkpoint.hpp"
#include "editdiff/error.hpp"
#include "editdiff/io.hpp"
#include "editdiff/parallel.hpp"
#include "editdiff/scoring.hpp"

namespace editdiff {
namespace {

/// Options that mirror config-file keys; only flags given on the command
/// line are collected, so they override the file.
class KeyOptions {
public:
    void add(CLI::App* app, const std::vector<std::string>& keys) {
        for (const auto& key : keys) {
            std::string flag = "--" + key;
            std::replace(flag.begin(), flag.end(), '_', '-');
            auto& slot = values_[key];
            options_.emplace_back(key, app->add_option(flag, slot, "overrides config key '" + key + "'"));
        }
    }
    KeyValues given() const {
        KeyValues kv;
        for (const auto& [key, opt] : options_) {
            if (opt->count() > 0) kv[key] = values_.at(key);
        }
        return kv;
    }

private:
    std::map<std::string, std::string> values_;
    std::vector<std::pair<std::string, CLI::Option*>> options_;
};

const std::vector<std::string> kTrainingKeys = {
    "residues", "embed_dim", "num_layers", "num_heads", "ff_dim", "max_len", "diffusion_steps", "schedule",
    "omega_del", "omega_ins", "rho_mask", "blosum_tau", "kernel", "steps", "warmup_steps", "batch_size",
    "lr", "lr_floor", "lr_warmup", "gamma_sub", "gamma_del", "gamma_ins", "lambda"};
const std::vector<std::string> kSamplerKeys = {"sample_steps", "tau_del", "tau_ins", "renoise",
                                               "blosum_tau", "delete_steps", "insert_steps"};
const std::vector<std::string> kEvolveKeys = {"iterations", "width",    "beam",    "retain_parents",
                                              "allow_indels", "proposer", "tau_del", "tau_ins"};

struct Globals {
    std::uint64_t seed = 0;
    int threads = 0;
    std::string config;
    KeyValues file;  ///< config-file keys other than seed/threads
};

KeyValues merged(const KeyValues& file, const KeyValues& cli, const std::vector<std::string>& allowed) {
    KeyValues kv;
    for (const auto& [k, v] : file) {
        if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
            throw FormatError("config key '" + k + "' does not apply to this subcommand");
        }
        kv[k] = v;
    }
    for (const auto& [k, v] : cli) kv[k] = v;
    return kv;
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << text;
    } else {
        write_text_file(path, text);
    }
}

std::vector<FastaRecord> read_fasta_file(const std::string& path, const Alphabet& alphabet) {
    try {
        return parse_fasta(read_text_file(path), alphabet);
    } catch (const FormatError& e) {
        throw FormatError(path + ": " + e.what());
    }
}

ObservedSequence first_sequence(const std::string& path, const Alphabet& alphabet) {
    auto records = read_fasta_file(path, alphabet);
    if (records.empty() || records.front().sequence.empty()) throw FormatError(path + ": no sequence found");
    return records.front().sequence;
}

Denoiser load_model(const std::string& path) {
    try {
        return Denoiser(load_checkpoint(path));
    } catch (const FormatError& e) {
        throw FormatError(path + ": " + e.what());
    }
}

std::vector<std::size_t> parse_positions(const std::string& text, std::size_t length) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        std::size_t pos = 0;
        try {
            pos = std::stoul(item);
        } catch (const std::exception&) {
            throw FormatError("bad position '" + item + "'");
        }
        if (pos < 1 || pos > length) throw FormatError("position " + item + " outside the sequence");
        out.push_back(pos - 1);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::string describe_edit(const std::optional<EditOp>& op, const Alphabet& alphabet) {
    return op ? format_edit_script({*op}, alphabet) : "template";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Edit-based discrete diffusion for protein sequences", "editdiff"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    auto* seed_opt = app.add_option("--seed", g.seed, "random seed (default 0)");
    auto* threads_opt = app.add_option("--threads", g.threads, "worker threads (default: all cores)");
    app.add_option("--config", g.config, "key = value configuration file")->check(CLI::ExistingFile);

    // train
    auto* train_cmd = app.add_subcommand("train", "train a denoiser on a FASTA corpus");
    std::string corpus_path, ckpt_out, metrics_path;
    train_cmd->add_option("--corpus", corpus_path, "training FASTA")->required();
    train_cmd->add_option("--out", ckpt_out, "checkpoint to write")->required();
    train_cmd->add_option("--metrics", metrics_path, "per-step metrics JSONL");
    KeyOptions train_keys;
    train_keys.add(train_cmd, kTrainingKeys);

    // generate
    auto* gen_cmd = app.add_subcommand("generate", "sample sequences with the edit-based sampler");
    std::string gen_ckpt, gen_out, traj_out, start_path, freeze_text;
    std::vector<std::size_t> lengths = {100, 200, 300, 400, 500};
    std::size_t per_length = 1;
    gen_cmd->add_option("--checkpoint", gen_ckpt, "model checkpoint")->required()->check(CLI::ExistingFile);
    gen_cmd->add_option("--len", lengths, "initial lengths")->capture_default_str();
    gen_cmd->add_option("--n", per_length, "samples per length")->capture_default_str();
    gen_cmd->add_option("--out", gen_out, "FASTA output (default stdout)");
    gen_cmd->add_option("--trajectories", traj_out, "trajectory JSONL output");
    gen_cmd->add_option("--start", start_path, "start from this FASTA sequence instead of the prior");
    gen_cmd->add_option("--freeze", freeze_text, "comma-separated 1-based start positions never edited");
    KeyOptions gen_keys;
    gen_keys.add(gen_cmd, kSamplerKeys);

    // score / score-indel
    std::string sc_ckpt, sc_wt, sc_muts, sc_out;
    bool sc_masked = false, sc_assay = false;
    auto* score_cmd = app.add_subcommand("score", "log-odds substitution scores");
    auto* indel_cmd = app.add_subcommand("score-indel", "indel scores from the deletion and insertion heads");
    for (auto* cmd : {score_cmd, indel_cmd}) {
        cmd->add_option("--checkpoint", sc_ckpt, "model checkpoint")->required()->check(CLI::ExistingFile);
        cmd->add_option("--wt", sc_wt, "wild-type FASTA (first record)")->required()->check(CLI::ExistingFile);
        cmd->add_option("--mutations", sc_muts, "mutation CSV")->required()->check(CLI::ExistingFile);
        cmd->add_option("--out", sc_out, "scored CSV (default stdout)");
        cmd->add_flag("--assay", sc_assay, "treat the second column as measurements and report Spearman");
    }
    score_cmd->add_flag("--masked", sc_masked, "mask the mutated sites (baseline scorer)");

    // evolve
    auto* evo_cmd = app.add_subcommand("evolve", "beam-search directed evolution against a profile oracle");
    std::string evo_ckpt, evo_profile, evo_template, evo_out, evo_history, evo_protect = "core";
    evo_cmd->add_option("--checkpoint", evo_ckpt, "model checkpoint (needed by the model proposer)");
    evo_cmd->add_option("--profile", evo_profile, "profile JSON used as oracle")->required()->check(CLI::ExistingFile);
    evo_cmd->add_option("--template", evo_template, "template FASTA (first record)")->required()->check(CLI::ExistingFile);
    evo_cmd->add_option("--protect", evo_protect, "'core', 'none' or comma-separated 1-based positions")->capture_default_str();
    evo_cmd->add_option("--out", evo_out, "final beam FASTA (default stdout)");
    evo_cmd->add_option("--history", evo_history, "per-iteration JSONL");
    KeyOptions evo_keys;
    evo_keys.add(evo_cmd, kEvolveKeys);

    // noise
    auto* noise_cmd = app.add_subcommand("noise", "simulate the forward corruption process");
    std::string noise_in, noise_out, noise_kernel = "uniform", noise_ckpt, noise_alignment = "canonical";
    int noise_t = 0, noise_steps = 500;
    double noise_odel = 0.1, noise_oins = 0.1, noise_rho = 0.5, noise_tau = 2.0;
    noise_cmd->add_option("--in", noise_in, "input FASTA")->required()->check(CLI::ExistingFile);
    noise_cmd->add_option("--t", noise_t, "timestep")->required();
    noise_cmd->add_option("--diffusion-steps", noise_steps, "T")->capture_default_str();
    noise_cmd->add_option("--kernel", noise_kernel, "mask, uniform, blosum or contextual")->capture_default_str();
    noise_cmd->add_option("--checkpoint", noise_ckpt, "model for the contextual kernel");
    noise_cmd->add_option("--omega-del", noise_odel)->capture_default_str();
    noise_cmd->add_option("--omega-ins", noise_oins)->capture_default_str();
    noise_cmd->add_option("--rho-mask", noise_rho)->capture_default_str();
    noise_cmd->add_option("--blosum-tau", noise_tau)->capture_default_str();
    noise_cmd->add_option("--alignment", noise_alignment, "canonical or random")->capture_default_str();
    noise_cmd->add_option("--out", noise_out, "corrupted FASTA (default stdout); length statistics go to stderr");

    // kernel
    auto* kernel_cmd = app.add_subcommand("kernel", "dump a noise matrix as CSV");
    bool k_uniform = false, k_blosum = false, k_mask = false, k_sub_only = false;
    int k_size = 20;
    double k_odel = 0.1, k_oins = 0.1, k_rho = 0.5, k_tau = 2.0;
    std::string k_out, k_scores;
    auto* kg = kernel_cmd->add_option_group("kind");
    kg->add_flag("--uniform", k_uniform, "uniform substitution kernel");
    kg->add_flag("--blosum", k_blosum, "BLOSUM softmax substitution kernel");
    kg->add_flag("--mask", k_mask, "pure masking (rho_mask = 1)");
    kg->require_option(1);
    kernel_cmd->add_option("--k", k_size, "number of residues (first K canonical letters)")->capture_default_str();
    kernel_cmd->add_option("--omega-del", k_odel)->capture_default_str();
    kernel_cmd->add_option("--omega-ins", k_oins)->capture_default_str();
    kernel_cmd->add_option("--rho-mask", k_rho)->capture_default_str();
    kernel_cmd->add_option("--blosum-tau", k_tau)->capture_default_str();
    kernel_cmd->add_option("--scores", k_scores, "score matrix file (default BLOSUM62)")->check(CLI::ExistingFile);
    kernel_cmd->add_flag("--sub-only", k_sub_only, "only the K x K residue block, rows = source (row-stochastic)");
    kernel_cmd->add_option("--out", k_out, "CSV output (default stdout)");

    // toygen
    auto* toy_cmd = app.add_subcommand("toygen", "sample a synthetic profile family");
    std::size_t toy_len = 100, toy_n = 1000;
    ProfileHyper hyper;
    std::string toy_out, toy_profile;
    toy_cmd->add_option("--length", toy_len, "reference length")->capture_default_str();
    toy_cmd->add_option("--n", toy_n, "number of sequences")->capture_default_str();
    toy_cmd->add_option("--residues", hyper.residues)->capture_default_str();
    toy_cmd->add_option("--core-fraction", hyper.core_fraction)->capture_default_str();
    toy_cmd->add_option("--core-mass", hyper.core_mass)->capture_default_str();
    toy_cmd->add_option("--concentration", hyper.concentration)->capture_default_str();
    toy_cmd->add_option("--mean-del", hyper.mean_del)->capture_default_str();
    toy_cmd->add_option("--mean-ins", hyper.mean_ins)->capture_default_str();
    toy_cmd->add_option("--out", toy_out, "FASTA output (default stdout)");
    toy_cmd->add_option("--profile-out", toy_profile, "profile JSON output");

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (!g.config.empty()) {
            KeyValues kv = parse_key_values(read_text_file(g.config));
            if (auto it = kv.find("seed"); it != kv.end()) {
                if (seed_opt->count() == 0) g.seed = std::stoull(it->second);
                kv.erase(it);
            }
            if (auto it = kv.find("threads"); it != kv.end()) {
                if (threads_opt->count() == 0) g.threads = std::stoi(it->second);
                kv.erase(it);
            }
            g.file = std::move(kv);
        }
        const int threads = resolve_threads(g.threads);

        if (train_cmd->parsed()) {
            TrainingConfig cfg;
            apply_training_keys(cfg, merged(g.file, train_keys.given(), kTrainingKeys));
            cfg.seed = g.seed;
            cfg.threads = threads;
            const Alphabet alphabet = Alphabet::with_size(cfg.model.residues);
            std::vector<ObservedSequence> corpus;
            for (auto& r : read_fasta_file(corpus_path, alphabet)) corpus.push_back(std::move(r.sequence));
            std::string metrics;
            const TrainingResult result = train(corpus, cfg, [&](const StepMetrics& m) {
                metrics += metrics_json_line(m);
                metrics += '\n';
            });
            save_checkpoint(result.params, ckpt_out);
            if (!metrics_path.empty()) write_text_file(metrics_path, metrics);
            const auto& last = result.metrics.empty() ? StepMetrics{} : result.metrics.back();
            err << "trained " << cfg.steps << " steps, final loss " << format_double(last.loss.total) << ", skipped "
                << result.skipped_examples << " examples\n";
            return 0;
        }

        if (gen_cmd->parsed()) {
            const Denoiser model = load_model(gen_ckpt);
            const Alphabet alphabet = Alphabet::with_size(model.residues());
            SamplerConfig cfg;
            apply_sampler_keys(cfg, merged(g.file, gen_keys.given(), kSamplerKeys));
            if (!start_path.empty()) {
                cfg.start = first_sequence(start_path, alphabet);
                cfg.frozen = parse_positions(freeze_text, cfg.start->size());
            } else if (!freeze_text.empty()) {
                throw Error("--freeze needs --start");
            }
            std::vector<FastaRecord> records;
            std::string trajectories;
            Rng root(g.seed);
            const std::vector<std::size_t> plan = cfg.start ? std::vector<std::size_t>{cfg.start->size()} : lengths;
            std::size_t id = 0;
            for (std::size_t len : plan) {
                cfg.init_length = len;
                const auto runs = generate_many(model, cfg, per_length, root.split(), threads);
                for (std::size_t i = 0; i < runs.size(); ++i, ++id) {
                    const auto& x0 = runs[i].final_sequence();
                    records.push_back({"sample" + std::to_string(id),
                                       "init_len=" + std::to_string(len) + " len=" + std::to_string(x0.size()), x0});
                    if (!traj_out.empty()) trajectories += trajectory_jsonl(runs[i], id, alphabet);
                }
            }
            emit(gen_out, write_fasta(records, alphabet), out);
            if (!traj_out.empty()) write_text_file(traj_out, trajectories);
            return 0;
        }

        if (score_cmd->parsed() || indel_cmd->parsed()) {
            if (!g.file.empty()) throw FormatError("the scoring subcommands take no config keys");
            const Denoiser model = load_model(sc_ckpt);
            const Alphabet alphabet = Alphabet::with_size(model.residues());
            const ObservedSequence wt = first_sequence(sc_wt, alphabet);
            auto rows = parse_mutation_csv(read_text_file(sc_muts));
            std::vector<EditScript> scripts;
            for (const auto& r : rows) {
                try {
                    scripts.push_back(parse_variant(r.variant, wt, alphabet));
                } catch (const FormatError& e) {
                    throw FormatError(sc_muts + ": variant '" + r.variant + "': " + e.what());
                }
            }
            const DenoiserOutput wt_out = model.forward(wt);
            std::vector<double> scores(rows.size());
            parallel_for(rows.size(), threads, [&](std::size_t i) {
                const EditScript& s = scripts[i];
                if (indel_cmd->parsed()) {
                    scores[i] = indel_score(wt_out, wt, s);
                    return;
                }
                MutationSet muts;
                for (const auto& op : s) {
                    if (op.kind != EditKind::substitute) {
                        throw FormatError("variant '" + rows[i].variant + "' has indels; use score-indel");
                    }
                    muts.push_back({op.pos, op.wt_token, op.new_token});
                }
                scores[i] = sc_masked ? masked_substitution_score(model, wt, muts) : substitution_score(wt_out, wt, muts);
            });
            std::vector<MutationRow> scored;
            std::vector<double> measured;
            for (std::size_t i = 0; i < rows.size(); ++i) {
                scored.push_back({rows[i].variant, scores[i]});
                if (sc_assay) {
                    if (!rows[i].value) throw FormatError(sc_muts + ": variant '" + rows[i].variant + "' lacks a measurement");
                    measured.push_back(*rows[i].value);
                }
            }
            emit(sc_out, write_mutation_csv(scored), out);
            if (sc_assay) err << "spearman " << format_double(spearman(scores, measured)) << "\n";
            return 0;
        }

        if (evo_cmd->parsed()) {
            EvolveConfig cfg;
            apply_evolve_keys(cfg, merged(g.file, evo_keys.given(), kEvolveKeys));
            cfg.seed = g.seed;
            cfg.threads = threads;
            const ProfileOracle oracle(parse_profile_json(read_text_file(evo_profile)));
            const Alphabet alphabet = Alphabet::with_size(oracle.profile().residues);
            std::optional<Denoiser> model;
            if (!evo_ckpt.empty()) {
                model.emplace(load_model(evo_ckpt));
                if (model->residues() != oracle.profile().residues) throw Error("checkpoint and profile alphabets differ");
            } else if (cfg.proposer == Proposer::model) {
                throw Error("the model proposer needs --checkpoint");
            }
            const ObservedSequence templ = first_sequence(evo_template, alphabet);
            std::vector<std::size_t> protect;
            if (evo_protect == "core") {
                protect = oracle.core_sites(templ);
            } else if (evo_protect != "none") {
                protect = parse_positions(evo_protect, templ.size());
            }
            const EvolveResult result =
                evolve(templ, protect, cfg, oracle, model ? &*model : nullptr, oracle.profile().residues);
            std::vector<FastaRecord> records;
            for (std::size_t i = 0; i < result.beam.size(); ++i) {
                const auto& c = result.beam[i];
                std::string desc = "score=" + format_double(c.score) + " iteration=" + std::to_string(c.iteration) +
                                   " edit=" + describe_edit(c.edit, alphabet);
                if (c.parent) desc += " parent=cand" + std::to_string(*c.parent);
                records.push_back({"cand" + std::to_string(c.id), desc, c.seq});
            }
            emit(evo_out, write_fasta(records, alphabet), out);
            if (!evo_history.empty()) {
                std::string h;
                for (const auto& s : result.history) {
                    h += history_json_line(s);
                    h += '\n';
                    if (s.kept_parents) err << "warning: iteration " << s.iteration << " filtered every proposal\n";
                }
                write_text_file(evo_history, h);
            }
            return 0;
        }

        if (noise_cmd->parsed()) {
            if (!g.file.empty()) throw FormatError("the noise subcommand takes no config keys");
            NoiseConfig nc;
            nc.steps = noise_steps;
            nc.kernel = {noise_odel, noise_oins, noise_rho};
            nc.blosum_tau = noise_tau;
            const KernelMode mode = parse_kernel_mode(noise_kernel);
            std::optional<Denoiser> model;
            if (mode == KernelMode::contextual) {
                if (noise_ckpt.empty()) throw Error("the contextual kernel needs --checkpoint");
                model.emplace(load_model(noise_ckpt));
            }
            const int k = model ? model->residues() : 20;
            const NoiseProcess process(nc, k);
            if (noise_t < 0 || noise_t > nc.steps) throw Error("--t must lie in [0, diffusion-steps]");
            if (noise_alignment != "canonical" && noise_alignment != "random") throw Error("--alignment must be canonical or random");
            const Alphabet& alphabet = process.alphabet();
            auto records = read_fasta_file(noise_in, alphabet);
            Rng rng(g.seed);
            double in_total = 0.0, out_total = 0.0;
            std::vector<FastaRecord> noisy;
            for (auto& r : records) {
                if (r.sequence.empty()) throw FormatError(noise_in + ": record '" + r.id + "' is empty");
                const LatentAlignment z0 = noise_alignment == "canonical" ? canonical_expand(r.sequence, alphabet)
                                                                          : random_alignment(r.sequence, alphabet, rng);
                const LatentAlignment zt = process.corrupt(z0, noise_t, mode, model ? &*model : nullptr, rng);
                ObservedSequence x;
                for (Token tok : zt.tokens) {
                    if (tok != alphabet.gap()) x.tokens.push_back(tok);
                }
                in_total += static_cast<double>(r.sequence.size());
                out_total += static_cast<double>(x.size());
                noisy.push_back({r.id, "t=" + std::to_string(noise_t) + " len=" + std::to_string(x.size()), x});
            }
            emit(noise_out, write_fasta(noisy, alphabet), out);
            const double a = process.schedule().at(noise_t);
            err << "sequences " << records.size() << " mean_in " << format_double(in_total / std::max<double>(1, records.size()))
                << " mean_out " << format_double(out_total / std::max<double>(1, records.size())) << " expected_ratio "
                << format_double(1.0 + (1.0 - a) * (noise_oins - noise_odel)) << "\n";
            return 0;
        }

        if (kernel_cmd->parsed()) {
            if (!g.file.empty()) throw FormatError("the kernel subcommand takes no config keys");
            const Alphabet alphabet = Alphabet::with_size(k_size);
            KernelParams params{k_odel, k_oins, k_rho};
            std::vector<std::string> labels;
            for (char c : alphabet.letters()) labels.emplace_back(1, c);
            if (k_blosum) {
                const Eigen::MatrixXd scores = k_scores.empty() ? Eigen::MatrixXd(blosum62().topLeftCorner(k_size, k_size))
                                                                : load_score_matrix(k_scores, alphabet);
                if (k_sub_only) {
                    emit(k_out, matrix_csv(blosum_substitution_kernel(scores, k_tau), labels), out);
                    return 0;
                }
                labels.emplace_back(1, kMaskChar);
                labels.emplace_back(1, kGapChar);
                emit(k_out, matrix_csv(build_transition_matrix(params, blosum_transition_kernel(scores, k_tau)).q, labels), out);
                return 0;
            }
            const StochasticMatrix uniform = uniform_substitution_kernel(k_size);
            if (k_sub_only) {
                emit(k_out, matrix_csv(uniform, labels), out);
                return 0;
            }
            if (k_mask) params.rho_mask = 1.0;
            labels.emplace_back(1, kMaskChar);
            labels.emplace_back(1, kGapChar);
            emit(k_out, matrix_csv(build_transition_matrix(params, uniform).q, labels), out);
            return 0;
        }

        if (toy_cmd->parsed()) {
            if (!g.file.empty()) throw FormatError("the toygen subcommand takes no config keys");
            Rng rng(g.seed);
            const ProfileModel profile = sample_profile(toy_len, hyper, rng);
            const Alphabet alphabet = Alphabet::with_size(hyper.residues);
            std::vector<FastaRecord> records;
            for (std::size_t i = 0; i < toy_n; ++i) {
                records.push_back({"toy" + std::to_string(i), "", sample_sequence(profile, rng)});
            }
            emit(toy_out, write_fasta(records, alphabet), out);
            if (!toy_profile.empty()) write_text_file(toy_profile, profile_json(profile, alphabet));
            return 0;
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

}  // namespace editdiff
