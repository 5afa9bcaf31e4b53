#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "editdiff/blosum.hpp"
#include "editdiff/checkpoint.hpp"
#include "editdiff/edit_script.hpp"
#include "editdiff/error.hpp"
#include "editdiff/evolution.hpp"
#include "editdiff/io.hpp"
#include "editdiff/parallel.hpp"
#include "editdiff/profile.hpp"
#include "editdiff/sampler.hpp"
#include "editdiff/scoring.hpp"
#include "editdiff/training.hpp"

namespace py = pybind11;
using namespace editdiff;

namespace {

ObservedSequence encode(const Alphabet& a, const std::string& s) { return ObservedSequence{a.encode(s)}; }

Alphabet alphabet_of(const Denoiser& m) { return Alphabet::with_size(m.residues()); }

Denoiser train_model(const std::vector<std::string>& sequences, const KeyValues& config, std::uint64_t seed,
                     int threads, std::vector<StepMetrics>* log) {
    TrainingConfig cfg;
    apply_training_keys(cfg, config);
    cfg.seed = seed;
    cfg.threads = resolve_threads(threads);
    const Alphabet a = Alphabet::with_size(cfg.model.residues);
    std::vector<ObservedSequence> corpus;
    for (const auto& s : sequences) corpus.push_back(encode(a, s));
    TrainingResult r;
    {
        py::gil_scoped_release release;
        r = train(corpus, cfg);
    }
    if (log) *log = r.metrics;
    return Denoiser(std::move(r.params));
}

py::dict metrics_dict(const StepMetrics& m) {
    py::dict d;
    d["step"] = m.step;
    d["L_sub"] = m.loss.sub;
    d["L_del"] = m.loss.del;
    d["L_ins"] = m.loss.ins;
    d["total"] = m.loss.total;
    d["lr"] = m.lr;
    d["kernel_mode"] = std::string(kernel_mode_name(m.mode));
    d["skipped"] = m.skipped;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Edit-based discrete diffusion for protein sequences";

    // pybind11 tries translators newest first, so the base class goes first.
    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
    py::register_exception<EmptySequenceError>(m, "EmptySequenceError", PyExc_ValueError);
    py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_RuntimeError);

    py::class_<Denoiser>(m, "Model")
        .def_static("load", [](const std::string& path) { return Denoiser(load_checkpoint(path)); }, py::arg("path"))
        .def_static("from_bytes",
                    [](const py::bytes& b) {
                        const std::string s = b;
                        return Denoiser(deserialize_checkpoint(std::vector<std::uint8_t>(s.begin(), s.end())));
                    })
        .def("save", [](const Denoiser& d, const std::string& path) { save_checkpoint(d.params(), path); })
        .def("to_bytes",
             [](const Denoiser& d) {
                 const auto v = serialize_checkpoint(d.params());
                 return py::bytes(reinterpret_cast<const char*>(v.data()), v.size());
             })
        .def_property_readonly("residues", &Denoiser::residues)
        .def_property_readonly("max_len", &Denoiser::max_len)
        .def_property_readonly("num_parameters", [](const Denoiser& d) { return d.params().count(); })
        .def(
            "forward",
            [](const Denoiser& d, const std::string& seq) {
                const DenoiserOutput out = d.forward(encode(alphabet_of(d), seq));
                return py::make_tuple(out.sub_logits, out.del_logits, out.ins_logits);
            },
            py::arg("sequence"), "Substitution logits (L x K+1), deletion logits (L) and insertion logits (L).");

    m.def(
        "train",
        [](const std::vector<std::string>& sequences, const KeyValues& config, std::uint64_t seed, int threads) {
            std::vector<StepMetrics> log;
            Denoiser model = train_model(sequences, config, seed, threads, &log);
            py::list metrics;
            for (const auto& s : log) metrics.append(metrics_dict(s));
            return py::make_tuple(std::move(model), metrics);
        },
        py::arg("sequences"), py::arg("config") = KeyValues{}, py::arg("seed") = 0, py::arg("threads") = 1,
        "Train a denoiser; config takes the same keys as the config file. Returns (model, metrics).");

    m.def(
        "generate",
        [](const Denoiser& model, std::size_t length, std::size_t n, std::uint64_t seed, const KeyValues& config,
           int threads) {
            SamplerConfig cfg;
            apply_sampler_keys(cfg, config);
            cfg.init_length = length;
            std::vector<Trajectory> runs;
            {
                py::gil_scoped_release release;
                runs = generate_many(model, cfg, n, seed, resolve_threads(threads));
            }
            const Alphabet a = alphabet_of(model);
            py::list seqs, trajs;
            for (std::size_t i = 0; i < runs.size(); ++i) {
                seqs.append(a.decode(runs[i].final_sequence().tokens));
                trajs.append(trajectory_jsonl(runs[i], i, a));
            }
            return py::make_tuple(seqs, trajs);
        },
        py::arg("model"), py::arg("length") = 100, py::arg("n") = 1, py::arg("seed") = 0,
        py::arg("config") = KeyValues{}, py::arg("threads") = 1,
        "Sample n sequences from initial length `length`. Returns (sequences, trajectory JSONL per sample).");

    m.def(
        "substitution_score",
        [](const Denoiser& model, const std::string& wt, const std::string& mutations, bool masked) {
            const Alphabet a = alphabet_of(model);
            const auto x = encode(a, wt);
            const auto muts = parse_point_mutations(mutations, a);
            return masked ? masked_substitution_score(model, x, muts) : substitution_score(model, x, muts);
        },
        py::arg("model"), py::arg("wt"), py::arg("mutations"), py::arg("masked") = false,
        "Log-odds score of point mutations such as 'A42G:K100R'.");

    m.def(
        "indel_score",
        [](const Denoiser& model, const std::string& wt, const std::string& variant) {
            const Alphabet a = alphabet_of(model);
            const auto x = encode(a, wt);
            return indel_score(model, x, parse_variant(variant, x, a));
        },
        py::arg("model"), py::arg("wt"), py::arg("variant"),
        "Score of an edit script ('del42;insA101'), point mutations or a full mutant sequence.");

    m.def(
        "forward_noise",
        [](const std::string& seq, int t, int steps, const std::string& kernel, double omega_del, double omega_ins,
           double rho_mask, std::uint64_t seed, const Denoiser* model) {
            NoiseConfig nc;
            nc.steps = steps;
            nc.kernel = {omega_del, omega_ins, rho_mask};
            const int k = model ? model->residues() : 20;
            const NoiseProcess process(nc, k);
            const Alphabet& a = process.alphabet();
            Rng rng(seed);
            const LatentAlignment z0 = random_alignment(encode(a, seq), a, rng);
            const LatentAlignment zt = process.corrupt(z0, t, parse_kernel_mode(kernel), model, rng);
            return py::make_tuple(a.decode(z0.tokens), a.decode(zt.tokens));
        },
        py::arg("sequence"), py::arg("t"), py::arg("steps") = 500, py::arg("kernel") = "mask", py::arg("omega_del") = 0.1,
        py::arg("omega_ins") = 0.1, py::arg("rho_mask") = 0.5, py::arg("seed") = 0, py::arg("model") = nullptr,
        "Corrupt a random alignment of `sequence` to level t. Returns (z0, z_t) with '-' for gaps and 'X' for mask.");

    m.def(
        "transition_matrix",
        [](const std::string& kind, int k, double omega_del, double omega_ins, double rho_mask, double blosum_tau) {
            StochasticMatrix sub;
            KernelParams p{omega_del, omega_ins, rho_mask};
            if (kind == "uniform" || kind == "mask") {
                sub = uniform_substitution_kernel(k);
                if (kind == "mask") p.rho_mask = 1.0;
            } else if (kind == "blosum") {
                sub = blosum_transition_kernel(blosum62().topLeftCorner(k, k), blosum_tau);
            } else {
                throw Error("kind must be uniform, blosum or mask");
            }
            return Eigen::MatrixXd(build_transition_matrix(p, sub).q);
        },
        py::arg("kind") = "uniform", py::arg("k") = 20, py::arg("omega_del") = 0.1, py::arg("omega_ins") = 0.1,
        py::arg("rho_mask") = 0.5, py::arg("blosum_tau") = 2.0,
        "(K+2) x (K+2) column-stochastic noise matrix indexed (target, source).");

    m.def(
        "blosum_kernel", [](double tau) { return Eigen::MatrixXd(blosum_substitution_kernel(blosum62(), tau)); },
        py::arg("tau") = 2.0, "Row-stochastic BLOSUM62 softmax kernel over the 20 amino acids.");

    m.def(
        "edit_script",
        [](const std::string& wt, const std::string& mut) {
            const Alphabet a;
            return format_edit_script(levenshtein_edit_script(encode(a, wt), encode(a, mut)), a);
        },
        py::arg("wt"), py::arg("mut"));

    m.def(
        "spearman",
        [](const std::vector<double>& x, const std::vector<double>& y) { return spearman(x, y); }, py::arg("x"),
        py::arg("y"));

    py::class_<ProfileModel>(m, "Profile")
        .def_static(
            "sample",
            [](std::size_t length, std::uint64_t seed, double core_fraction, double mean_del, double mean_ins) {
                ProfileHyper h;
                h.core_fraction = core_fraction;
                h.mean_del = mean_del;
                h.mean_ins = mean_ins;
                Rng rng(seed);
                return sample_profile(length, h, rng);
            },
            py::arg("length") = 100, py::arg("seed") = 0, py::arg("core_fraction") = ProfileHyper{}.core_fraction,
            py::arg("mean_del") = ProfileHyper{}.mean_del, py::arg("mean_ins") = ProfileHyper{}.mean_ins)
        .def_static("from_json", [](const std::string& text) { return parse_profile_json(text); })
        .def("to_json", [](const ProfileModel& p) { return profile_json(p, Alphabet::with_size(p.residues)); })
        .def_property_readonly("length", &ProfileModel::length)
        .def_property_readonly("core", [](const ProfileModel& p) { return p.core; })
        .def(
            "sample_sequences",
            [](const ProfileModel& p, std::size_t n, std::uint64_t seed) {
                Rng rng(seed);
                const Alphabet a = Alphabet::with_size(p.residues);
                std::vector<std::string> out;
                for (std::size_t i = 0; i < n; ++i) out.push_back(a.decode(sample_sequence(p, rng).tokens));
                return out;
            },
            py::arg("n"), py::arg("seed") = 0)
        .def("loglik", [](const ProfileModel& p, const std::string& s) {
            return loglik(p, encode(Alphabet::with_size(p.residues), s));
        });

    m.def(
        "evolve",
        [](const ProfileModel& profile, const std::string& templ, const Denoiser* model, const KeyValues& config,
           std::uint64_t seed, bool protect_core, int threads) {
            EvolveConfig cfg;
            apply_evolve_keys(cfg, config);
            cfg.seed = seed;
            cfg.threads = resolve_threads(threads);
            if (!model) cfg.proposer = Proposer::uniform;
            const ProfileOracle oracle(profile);
            const Alphabet a = Alphabet::with_size(profile.residues);
            const auto x = encode(a, templ);
            const auto protect = protect_core ? oracle.core_sites(x) : std::vector<std::size_t>{};
            EvolveResult r;
            {
                py::gil_scoped_release release;
                r = evolve(x, protect, cfg, oracle, model, profile.residues);
            }
            py::list beam, history;
            for (const auto& c : r.beam) beam.append(py::make_tuple(a.decode(c.seq.tokens), c.score));
            for (const auto& h : r.history) history.append(h.best_score);
            return py::make_tuple(beam, history, r.template_score);
        },
        py::arg("profile"), py::arg("template"), py::arg("model") = nullptr, py::arg("config") = KeyValues{},
        py::arg("seed") = 0, py::arg("protect_core") = true, py::arg("threads") = 1,
        "Beam search against the profile oracle. Returns (beam [(seq, score)], best score per iteration, template score).");
}
