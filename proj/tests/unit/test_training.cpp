#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "editdiff/alphabet.hpp"
#include "editdiff/contextual.hpp"
#include "editdiff/error.hpp"
#include "editdiff/losses.hpp"
#include "editdiff/training.hpp"
#include "oracles.hpp"

using namespace editdiff;

namespace {

// Every z_t reachable from z0 under Q. Residue slots can become any token;
// gap slots become a residue or stay gap.
void for_each_outcome(const std::vector<Token>& z0, int k, const std::function<void(const std::vector<Token>&)>& fn) {
    std::vector<Token> zt(z0.size());
    std::function<void(std::size_t)> rec = [&](std::size_t j) {
        if (j == z0.size()) {
            fn(zt);
            return;
        }
        for (Token v = 0; v <= k + 1; ++v) {
            if (z0[j] == k + 1 && v == k) continue;  // a gap never becomes mask
            zt[j] = v;
            rec(j + 1);
        }
    };
    rec(0);
}

void check_exhaustive(int k, std::size_t max_len) {
    Alphabet a = Alphabet::with_size(k);
    const Token g = a.gap();
    std::size_t checked = 0;
    for (std::size_t l = 1; l <= max_len; ++l) {
        std::vector<Token> x(l, 0);
        for (;;) {
            for (const auto& z0 : oracle::all_alignments(x, g)) {
                for_each_outcome(z0, k, [&](const std::vector<Token>& zt) {
                    auto want = oracle::direct_targets(z0, zt, g);
                    if (want.x.empty()) {
                        CHECK_THROWS_AS(alignment_targets(LatentAlignment{z0}, LatentAlignment{zt}, a),
                                        EmptySequenceError);
                        return;
                    }
                    auto [got_x, got] = alignment_targets(LatentAlignment{z0}, LatentAlignment{zt}, a);
                    bool same = got_x.tokens == want.x && got.size() == want.x.size();
                    for (std::size_t i = 0; same && i < want.x.size(); ++i) {
                        same = got.sub_target[i] == want.sub[i] && got.del[i] == want.del[i] && got.ins[i] == want.ins[i];
                    }
                    if (!same) {
                        FAIL_CHECK("target mismatch for z0=" << a.decode(z0) << " zt=" << a.decode(zt));
                    }
                    ++checked;
                });
            }
            std::size_t i = 0;
            while (i < l && ++x[i] == k) x[i++] = 0;
            if (i == l) break;
        }
    }
    CHECK(checked > 0);
}

}  // namespace

TEST_CASE("targets match the direct definition on every small case") {
    check_exhaustive(3, 2);
}

TEST_CASE("hand-traced fixture") {
    Alphabet a = Alphabet::with_size(4);  // A C D E
    const Token A = 0, B = 1, C = 2, D = 3, g = a.gap();
    // z0 = [A, B, gap, gap], z_t = [A, C, D, gap]: B -> C substitution and an
    // insertion of D into a gap slot.
    auto [x, t] = alignment_targets(LatentAlignment{{A, B, g, g}}, LatentAlignment{{A, C, D, g}}, a);
    CHECK(x.tokens == std::vector<Token>{A, C, D});
    CHECK(t.sub_target == std::vector<Token>{-1, B, -1});
    CHECK(t.del == std::vector<std::uint8_t>{0, 0, 1});
    CHECK(t.ins == std::vector<std::uint8_t>{0, 0, 0});

    // Deleting B makes A responsible for an insertion.
    auto [x2, t2] = alignment_targets(LatentAlignment{{A, B, g, g}}, LatentAlignment{{A, g, g, g}}, a);
    CHECK(x2.tokens == std::vector<Token>{A});
    CHECK(t2.ins == std::vector<std::uint8_t>{1});

    // Mask-corrupted positions are active substitution targets.
    auto [x3, t3] = alignment_targets(LatentAlignment{{A, g}}, LatentAlignment{{a.mask(), g}}, a);
    CHECK(t3.sub_target == std::vector<Token>{A});
}

TEST_CASE("make_training_example draws consistent pairs") {
    NoiseConfig nc;
    nc.steps = 20;
    NoiseProcess noise(nc, 3);
    const Alphabet& a = noise.alphabet();
    ObservedSequence x0{{0, 1, 2}};
    std::set<std::vector<Token>> seen_alignments;
    Rng rng(4);
    for (int i = 0; i < 3000; ++i) {
        for (KernelMode mode : {KernelMode::mask, KernelMode::uniform, KernelMode::blosum, KernelMode::contextual}) {
            auto ex = make_training_example(x0, noise, mode, nullptr, LambdaMode::inverse_t, 16, rng);
            if (!ex) continue;
            REQUIRE(collapse(ex->z0, a) == x0);
            REQUIRE(ex->z0.size() == 6);
            seen_alignments.insert(ex->z0.tokens);
            auto want = oracle::direct_targets(ex->z0.tokens, ex->zt.tokens, a.gap());
            CHECK(ex->example.input.tokens == want.x);
            for (std::size_t k = 0; k < want.x.size(); ++k) {
                CHECK(ex->example.targets.sub_target[k] == want.sub[k]);
                CHECK(static_cast<int>(ex->example.targets.del[k]) == want.del[k]);
                CHECK(static_cast<int>(ex->example.targets.ins[k]) == want.ins[k]);
            }
            CHECK(ex->example.t >= 1);
            CHECK(ex->example.t <= 20);
            CHECK(ex->example.lambda == doctest::Approx(1.0 / ex->example.t));
            if (mode == KernelMode::mask || mode == KernelMode::contextual) {
                // Without a model the contextual kernel is the mask kernel:
                // residues only ever turn into mask or gap.
                for (std::size_t j = 0; j < 6; ++j) {
                    if (ex->z0.tokens[j] != a.gap() && ex->zt.tokens[j] != a.gap()) {
                        CHECK((ex->zt.tokens[j] == ex->z0.tokens[j] || ex->zt.tokens[j] == a.mask()));
                    }
                }
            }
        }
    }
    CHECK(seen_alignments.size() == 20);
}

TEST_CASE("zero indel rates give all-zero indel targets") {
    NoiseConfig nc;
    nc.steps = 10;
    nc.kernel = {0.0, 0.0, 0.5};
    NoiseProcess noise(nc, 5);
    Rng rng(8);
    ObservedSequence x0{{0, 1, 2, 3, 4, 0, 1}};
    for (int i = 0; i < 500; ++i) {
        auto ex = make_training_example(x0, noise, KernelMode::uniform, nullptr, LambdaMode::uniform, 64, rng);
        REQUIRE(ex.has_value());
        for (auto d : ex->example.targets.del) CHECK(d == 0);
        for (auto v : ex->example.targets.ins) CHECK(v == 0);
        CHECK(ex->example.input.size() == x0.size());
    }
}

TEST_CASE("over-long draws are skipped after bounded retries") {
    NoiseConfig nc;
    nc.steps = 4;
    nc.kernel = {0.0, 1.0, 0.5};
    NoiseProcess noise(nc, 3);
    Rng rng(1);
    ObservedSequence x0{{0, 1, 2, 0}};
    // Any corrupted gap slot turns into a residue, which overflows max_len = 4.
    bool skipped = false;
    for (int i = 0; i < 50; ++i) {
        auto ex = make_training_example(x0, noise, KernelMode::mask, nullptr, LambdaMode::uniform, 4, rng);
        if (!ex) skipped = true;
    }
    CHECK(skipped);
}

TEST_CASE("losses in closed form") {
    DenoiserOutput out;
    out.sub_logits = RowMatrix::Zero(2, 4);
    out.del_logits = Eigen::VectorXd::Constant(2, -20.0);
    out.ins_logits = Eigen::VectorXd::Zero(2);
    HeadTargets t;
    t.sub_target = {-1, 2};
    t.del = {0, 0};
    t.ins = {1, 0};
    auto l = decomposed_losses(out, t, {1.0, 0.5, 0.5}, 2.0);
    CHECK(l.sub == doctest::Approx(std::log(4.0)));
    CHECK(l.del < 1e-8);
    CHECK(l.ins == doctest::Approx(2 * std::log(2.0)));
    CHECK(l.total == doctest::Approx(2.0 * (std::log(4.0) + 0.5 * l.del + 0.5 * l.ins)));
    CHECK(binary_cross_entropy_logit(0.0, true) == doctest::Approx(std::log(2.0)));
    CHECK(binary_cross_entropy_logit(800.0, false) == doctest::Approx(800.0));
}

TEST_CASE("contextual noise rows can be cached without changing the draw") {
    DenoiserConfig c;
    c.residues = 4;
    c.embed_dim = 8;
    c.num_heads = 2;
    c.num_layers = 1;
    c.ff_dim = 8;
    c.max_len = 16;
    Rng init(1);
    Denoiser model(DenoiserParams::initialize(c, init));
    const auto s = linear_schedule(10);
    LatentAlignment z0{{0, 5, 1, 2, 5, 3, 5, 5}};
    const KernelParams kp{0.1, 0.1, 0.5};
    Rng r1(7), r2(7);
    auto direct = contextual_forward_noise(model, z0, 6, s, kp, r1);
    auto rows = contextual_substitution_rows(model, z0, 6, s, r2);
    auto cached = apply_contextual_noise(z0, rows, kp, 4, r2);
    CHECK(direct == cached);
}

TEST_CASE("training is deterministic and learns on a tiny corpus") {
    TrainingConfig cfg;
    cfg.model.residues = 4;
    cfg.model.embed_dim = 16;
    cfg.model.num_heads = 2;
    cfg.model.num_layers = 1;
    cfg.model.ff_dim = 16;
    cfg.model.max_len = 32;
    cfg.noise.steps = 20;
    cfg.steps = 120;
    cfg.warmup_steps = 40;
    cfg.lr_warmup = 10;
    cfg.lr = 3e-3;
    cfg.seed = 11;
    std::vector<ObservedSequence> corpus{{{0, 1, 2, 3, 0, 1, 2, 3}}, {{0, 1, 2, 3, 0, 1}}, {{3, 2, 1, 0, 3, 2, 1, 0}}};
    std::vector<StepMetrics> log;
    auto a = train(corpus, cfg, [&](const StepMetrics& m) { log.push_back(m); });
    auto b = train(corpus, cfg);
    CHECK(a.params == b.params);
    REQUIRE(log.size() == 120);
    CHECK(log[0].mode == KernelMode::mask);
    CHECK(log[39].mode == KernelMode::mask);
    CHECK(log[40].mode == KernelMode::contextual);
    cfg.threads = 3;
    CHECK(train(corpus, cfg).params == a.params);

    NoiseProcess noise(cfg.noise, 4);
    auto eval = make_eval_batch(corpus, noise, 32, 5);
    for (int rep = 0; rep < 5; ++rep) {
        auto more = make_eval_batch(corpus, noise, 32, 6 + rep);
        eval.insert(eval.end(), more.begin(), more.end());
    }
    const double before = evaluate_loss(Denoiser(initial_params(cfg)), eval, cfg.weights).total;
    const double after = evaluate_loss(Denoiser(a.params), eval, cfg.weights).total;
    CHECK(after < before);
}

TEST_CASE("config validation") {
    TrainingConfig cfg;
    cfg.warmup_steps = cfg.steps + 1;
    CHECK_THROWS(cfg.validate());
    cfg = TrainingConfig{};
    cfg.weights = {0.0, 0.0, 0.0};
    CHECK_THROWS(cfg.validate());
    CHECK_THROWS(train({}, TrainingConfig{}));
    CHECK(parse_kernel_mode("blosum") == KernelMode::blosum);
    CHECK_THROWS(parse_kernel_mode("gaussian"));
}
