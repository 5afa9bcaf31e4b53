#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "editdiff/cli.hpp"
#include "editdiff/io.hpp"
#include "editdiff/kernels.hpp"

using namespace editdiff;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "editdiff");
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

struct Workdir {
    fs::path dir;
    Workdir() : dir(fs::temp_directory_path() / "editdiff_cli_test") {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Workdir() { fs::remove_all(dir); }
    std::string operator/(const std::string& name) const { return (dir / name).string(); }
};

const char* kTinyConfig =
    "embed_dim = 8\nnum_heads = 2\nnum_layers = 1\nff_dim = 8\nmax_len = 48\ndiffusion_steps = 20\n"
    "steps = 6\nwarmup_steps = 3\nbatch_size = 2\nlr_warmup = 2\n";

}  // namespace

TEST_CASE("kernel dump matches the transition matrix") {
    auto r = run({"kernel", "--uniform", "--k", "4", "--omega-del", "0.2", "--omega-ins", "0.3", "--rho-mask", "0.4"});
    REQUIRE(r.code == 0);
    std::vector<std::string> labels;
    auto m = parse_matrix_csv(r.out, &labels);
    CHECK(m.rows() == 6);
    CHECK(m.cols() == 6);
    CHECK(labels == std::vector<std::string>{"A", "C", "D", "E", "X", "-"});
    CHECK(is_column_stochastic(m));
    auto q = build_transition_matrix({0.2, 0.3, 0.4}, uniform_substitution_kernel(4));
    CHECK((m - q.q).cwiseAbs().maxCoeff() == 0.0);

    auto b = run({"kernel", "--blosum", "--k", "20", "--sub-only", "--blosum-tau", "0.1"});
    REQUIRE(b.code == 0);
    auto sub = parse_matrix_csv(b.out);
    for (Eigen::Index i = 0; i < 20; ++i) {
        Eigen::Index arg;
        sub.row(i).maxCoeff(&arg);
        CHECK(arg == i);
    }
}

TEST_CASE("usage errors exit nonzero") {
    CHECK(run({}).code != 0);
    CHECK(run({"frobnicate"}).code != 0);
    CHECK(run({"kernel", "--bogus"}).code != 0);
    auto missing = run({"generate", "--checkpoint", "/no/such/file.ckpt"});
    CHECK(missing.code != 0);
    CHECK(missing.err.find("/no/such/file.ckpt") != std::string::npos);
}

TEST_CASE("toygen, train, generate, score, evolve end to end") {
    Workdir w;
    auto toy = run({"--seed", "3", "toygen", "--length", "20", "--n", "30", "--out", w / "corpus.fa", "--profile-out",
                    w / "profile.json"});
    REQUIRE(toy.code == 0);
    write_text_file(w / "tiny.cfg", kTinyConfig);

    auto train = run({"--seed", "1", "--threads", "1", "--config", w / "tiny.cfg", "train", "--corpus", w / "corpus.fa",
                      "--out", w / "a.ckpt", "--metrics", w / "metrics.jsonl"});
    REQUIRE_MESSAGE(train.code == 0, train.err);
    auto again = run({"--seed", "1", "--threads", "2", "--config", w / "tiny.cfg", "train", "--corpus", w / "corpus.fa",
                      "--out", w / "b.ckpt"});
    REQUIRE(again.code == 0);
    CHECK(read_text_file(w / "a.ckpt") == read_text_file(w / "b.ckpt"));
    const auto metrics = read_text_file(w / "metrics.jsonl");
    CHECK(std::count(metrics.begin(), metrics.end(), '\n') == 6);
    CHECK(parse_metrics_json_line(metrics.substr(0, metrics.find('\n'))).mode == KernelMode::mask);

    // CLI flag beats the config file.
    auto longer = run({"--seed", "1", "--config", w / "tiny.cfg", "train", "--corpus", w / "corpus.fa", "--out",
                       w / "c.ckpt", "--metrics", w / "m2.jsonl", "--steps", "4", "--warmup-steps", "1"});
    REQUIRE(longer.code == 0);
    const auto m2 = read_text_file(w / "m2.jsonl");
    CHECK(std::count(m2.begin(), m2.end(), '\n') == 4);

    std::vector<std::string> gen{"--seed", "7", "generate", "--checkpoint", w / "a.ckpt", "--len", "10", "20", "--n", "2",
                                 "--sample-steps", "8", "--trajectories", w / "traj.jsonl"};
    auto g1 = run(gen);
    REQUIRE_MESSAGE(g1.code == 0, g1.err);
    const auto traj1 = read_text_file(w / "traj.jsonl");
    auto g2 = run(gen);
    CHECK(g1.out == g2.out);
    CHECK(read_text_file(w / "traj.jsonl") == traj1);
    const Alphabet a;
    auto records = parse_fasta(g1.out, a);
    REQUIRE(records.size() == 4);
    CHECK(records[0].id == "sample0");
    auto trajs = parse_trajectory_jsonl(traj1, a);
    REQUIRE(trajs.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(replay(trajs[i]) == records[i].sequence);

    auto first = parse_fasta(read_text_file(w / "corpus.fa"), a)[0];
    write_text_file(w / "wt.fa", write_fasta({first}, a));
    const std::string c0(1, a.to_char(first.sequence[0]));
    const std::string other = c0 == "A" ? "C" : "A";
    write_text_file(w / "muts.csv", "variant,fitness\n" + c0 + "1" + c0 + ",0.5\n" + c0 + "1" + other + ",-1\n");
    auto sc = run({"score", "--checkpoint", w / "a.ckpt", "--wt", w / "wt.fa", "--mutations", w / "muts.csv"});
    REQUIRE_MESSAGE(sc.code == 0, sc.err);
    auto rows = parse_mutation_csv(sc.out);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].value == 0.0);
    auto assay = run({"score", "--checkpoint", w / "a.ckpt", "--wt", w / "wt.fa", "--mutations", w / "muts.csv", "--assay"});
    CHECK(assay.err.find("spearman") != std::string::npos);

    write_text_file(w / "indels.csv", "variant\ndel2\nins" + other + "0\n");
    auto si = run({"score-indel", "--checkpoint", w / "a.ckpt", "--wt", w / "wt.fa", "--mutations", w / "indels.csv"});
    REQUIRE_MESSAGE(si.code == 0, si.err);
    CHECK(run({"score", "--checkpoint", w / "a.ckpt", "--wt", w / "wt.fa", "--mutations", w / "indels.csv"}).code != 0);

    // Any sequence passes the filter when the profile has no core.
    auto toy2 = run({"--seed", "4", "toygen", "--length", "20", "--n", "1", "--core-fraction", "0", "--out",
                     w / "t2.fa", "--profile-out", w / "p2.json"});
    REQUIRE(toy2.code == 0);
    std::vector<std::string> evo{"--seed", "2", "evolve", "--checkpoint", w / "a.ckpt", "--profile", w / "p2.json",
                                 "--template", w / "t2.fa", "--iterations", "3", "--width", "10", "--beam", "3",
                                 "--history", w / "hist.jsonl"};
    auto e1 = run(evo);
    REQUIRE_MESSAGE(e1.code == 0, e1.err);
    CHECK(run(evo).out == e1.out);
    const auto hist = read_text_file(w / "hist.jsonl");
    CHECK(std::count(hist.begin(), hist.end(), '\n') == 3);
    CHECK(parse_fasta(e1.out, a).size() == 3);

    auto noisy = run({"--seed", "5", "noise", "--in", w / "corpus.fa", "--t", "10", "--diffusion-steps", "20"});
    REQUIRE(noisy.code == 0);
    CHECK(parse_fasta(noisy.out, a).size() == 30);
    CHECK(noisy.err.find("expected_ratio") != std::string::npos);
    auto ctx = run({"noise", "--in", w / "corpus.fa", "--t", "10", "--diffusion-steps", "20", "--kernel", "contextual",
                    "--checkpoint", w / "a.ckpt"});
    CHECK(ctx.code == 0);

    write_text_file(w / "bad.cfg", "stepz = 3\n");
    auto bad = run({"--config", w / "bad.cfg", "train", "--corpus", w / "corpus.fa", "--out", w / "d.ckpt"});
    CHECK(bad.code == 1);
    CHECK(bad.err.rfind("error:", 0) == 0);
}
