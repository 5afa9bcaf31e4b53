#include "editdiff/denoiser.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "editdiff/error.hpp"
#include "editdiff/parallel.hpp"

namespace editdiff {
namespace {

using RowVector = Eigen::RowVectorXd;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstVectorMap = Eigen::Map<const RowVector>;
using VectorMap = Eigen::Map<RowVector>;

constexpr double kLayerNormEps = 1e-5;
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)

std::vector<TensorInfo> build_layout(const DenoiserConfig& c) {
    std::vector<TensorInfo> layout;
    std::size_t offset = 0;
    auto add = [&](std::string name, std::vector<std::uint32_t> dims) {
        std::size_t size = 1;
        for (auto d : dims) size *= d;
        layout.push_back({std::move(name), std::move(dims), offset, size});
        offset += size;
    };
    const auto d = static_cast<std::uint32_t>(c.embed_dim);
    const auto ff = static_cast<std::uint32_t>(c.ff_dim);
    add("tok_emb", {static_cast<std::uint32_t>(c.vocab_size()), d});
    for (int l = 0; l < c.num_layers; ++l) {
        const std::string p = "layer" + std::to_string(l) + ".";
        add(p + "ln1.g", {d});
        add(p + "ln1.b", {d});
        add(p + "wq", {d, d});
        add(p + "bq", {d});
        add(p + "wk", {d, d});
        add(p + "bk", {d});
        add(p + "wv", {d, d});
        add(p + "bv", {d});
        add(p + "wo", {d, d});
        add(p + "bo", {d});
        add(p + "ln2.g", {d});
        add(p + "ln2.b", {d});
        add(p + "w1", {d, ff});
        add(p + "b1", {ff});
        add(p + "w2", {ff, d});
        add(p + "b2", {d});
    }
    add("lnf.g", {d});
    add("lnf.b", {d});
    add("sub.w", {d, static_cast<std::uint32_t>(c.vocab_size())});
    add("sub.b", {static_cast<std::uint32_t>(c.vocab_size())});
    add("del.w", {d, 1});
    add("del.b", {1});
    add("ins.w", {d, 1});
    add("ins.b", {1});
    return layout;
}

// Offsets of each tensor in the flat buffer, resolved once per model.
struct LayerSlots {
    std::size_t ln1_g, ln1_b, wq, bq, wk, bk, wv, bv, wo, bo, ln2_g, ln2_b, w1, b1, w2, b2;
};
struct Slots {
    std::size_t tok_emb;
    std::vector<LayerSlots> layers;
    std::size_t lnf_g, lnf_b, sub_w, sub_b, del_w, del_b, ins_w, ins_b;
};

Slots resolve_slots(const DenoiserParams& p) {
    auto at = [&](const std::string& name) { return p.tensor(name).offset; };
    Slots s{};
    s.tok_emb = at("tok_emb");
    for (int l = 0; l < p.config().num_layers; ++l) {
        const std::string q = "layer" + std::to_string(l) + ".";
        s.layers.push_back({at(q + "ln1.g"), at(q + "ln1.b"), at(q + "wq"), at(q + "bq"), at(q + "wk"), at(q + "bk"),
                            at(q + "wv"), at(q + "bv"), at(q + "wo"), at(q + "bo"), at(q + "ln2.g"), at(q + "ln2.b"),
                            at(q + "w1"), at(q + "b1"), at(q + "w2"), at(q + "b2")});
    }
    s.lnf_g = at("lnf.g");
    s.lnf_b = at("lnf.b");
    s.sub_w = at("sub.w");
    s.sub_b = at("sub.b");
    s.del_w = at("del.w");
    s.del_b = at("del.b");
    s.ins_w = at("ins.w");
    s.ins_b = at("ins.b");
    return s;
}

struct LayerNormCache {
    RowMatrix hat;
    Eigen::VectorXd rstd;
};

void layer_norm(const RowMatrix& x, const ConstVectorMap& gain, const ConstVectorMap& bias, LayerNormCache& cache,
                RowMatrix& y) {
    const auto rows = x.rows();
    cache.hat.resize(rows, x.cols());
    cache.rstd.resize(rows);
    y.resize(rows, x.cols());
    for (Eigen::Index i = 0; i < rows; ++i) {
        const double mean = x.row(i).mean();
        const double var = (x.row(i).array() - mean).square().mean();
        const double rstd = 1.0 / std::sqrt(var + kLayerNormEps);
        cache.rstd(i) = rstd;
        cache.hat.row(i) = (x.row(i).array() - mean) * rstd;
        y.row(i) = cache.hat.row(i).cwiseProduct(gain) + bias;
    }
}

// Returns dx; accumulates gain/bias gradients.
RowMatrix layer_norm_backward(const RowMatrix& dy, const LayerNormCache& cache, const ConstVectorMap& gain,
                              VectorMap dgain, VectorMap dbias) {
    dgain += dy.cwiseProduct(cache.hat).colwise().sum();
    dbias += dy.colwise().sum();
    RowMatrix dx(dy.rows(), dy.cols());
    for (Eigen::Index i = 0; i < dy.rows(); ++i) {
        const RowVector dhat = dy.row(i).cwiseProduct(gain);
        const double mean_dhat = dhat.mean();
        const double mean_dhat_hat = dhat.cwiseProduct(cache.hat.row(i)).mean();
        dx.row(i) = cache.rstd(i) * (dhat.array() - mean_dhat - cache.hat.row(i).array() * mean_dhat_hat).matrix();
    }
    return dx;
}

double gelu(double u) { return 0.5 * u * (1.0 + std::tanh(kGeluC * (u + 0.044715 * u * u * u))); }

double gelu_grad(double u) {
    const double th = std::tanh(kGeluC * (u + 0.044715 * u * u * u));
    return 0.5 * (1.0 + th) + 0.5 * u * (1.0 - th * th) * kGeluC * (1.0 + 3.0 * 0.044715 * u * u);
}

void softmax_rows(RowMatrix& s) {
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
        const double top = s.row(i).maxCoeff();
        s.row(i) = (s.row(i).array() - top).exp().matrix();
        s.row(i) /= s.row(i).sum();
    }
}

RowMatrix sinusoidal_positions(int max_len, int dim) {
    RowMatrix pe(max_len, dim);
    for (int pos = 0; pos < max_len; ++pos) {
        for (int i = 0; i < dim; i += 2) {
            const double freq = std::pow(10000.0, -static_cast<double>(i) / dim);
            pe(pos, i) = std::sin(pos * freq);
            if (i + 1 < dim) pe(pos, i + 1) = std::cos(pos * freq);
        }
    }
    return pe;
}

}  // namespace

void DenoiserConfig::validate() const {
    if (residues < 2) throw Error("denoiser needs at least two residues");
    if (embed_dim < 2 || num_layers < 1 || num_heads < 1 || ff_dim < 1 || max_len < 1) {
        throw Error("denoiser dimensions must be positive");
    }
    if (embed_dim % num_heads != 0) throw Error("embed_dim must be divisible by num_heads");
}

DenoiserParams DenoiserParams::zeros(const DenoiserConfig& config) {
    config.validate();
    DenoiserParams p;
    p.config_ = config;
    p.layout_ = build_layout(config);
    p.values_.assign(p.layout_.back().offset + p.layout_.back().size, 0.0);
    return p;
}

DenoiserParams DenoiserParams::initialize(const DenoiserConfig& config, Rng& rng) {
    DenoiserParams p = zeros(config);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double d = config.embed_dim;
    const double residual_scale = 1.0 / std::sqrt(2.0 * config.num_layers);
    for (const auto& t : p.layout_) {
        auto v = p.values(t.name);
        const std::string_view name = t.name;
        double stddev = 0.0;
        if (name == "tok_emb") {
            stddev = 0.5;
        } else if (name.ends_with(".g")) {
            std::fill(v.begin(), v.end(), 1.0);
            continue;
        } else if (name.ends_with("wq") || name.ends_with("wk") || name.ends_with("wv") || name.ends_with("w1")) {
            stddev = 1.0 / std::sqrt(d);
        } else if (name.ends_with("wo")) {
            stddev = residual_scale / std::sqrt(d);
        } else if (name.ends_with("w2")) {
            stddev = residual_scale / std::sqrt(static_cast<double>(config.ff_dim));
        } else if (name == "sub.w" || name == "del.w" || name == "ins.w") {
            stddev = 0.02;
        } else if (name == "del.b" || name == "ins.b") {
            // Indels are rare; start the binary heads below 0.5.
            std::fill(v.begin(), v.end(), -2.0);
            continue;
        }
        for (double& x : v) x = stddev * normal(rng.engine());
    }
    p.round_to_float();
    return p;
}

const TensorInfo& DenoiserParams::tensor(std::string_view name) const {
    for (const auto& t : layout_) {
        if (t.name == name) return t;
    }
    throw Error("no parameter tensor named " + std::string(name));
}

std::span<double> DenoiserParams::values(std::string_view name) {
    const auto& t = tensor(name);
    return std::span<double>(values_).subspan(t.offset, t.size);
}

std::span<const double> DenoiserParams::values(std::string_view name) const {
    const auto& t = tensor(name);
    return std::span<const double>(values_).subspan(t.offset, t.size);
}

void DenoiserParams::round_to_float() {
    for (double& v : values_) v = static_cast<double>(static_cast<float>(v));
}

struct Denoiser::Cache {
    struct Layer {
        RowMatrix input;
        LayerNormCache ln1;
        RowMatrix a;
        RowMatrix q, k, v;
        std::vector<RowMatrix> probs;
        RowMatrix attn;
        RowMatrix mid;
        LayerNormCache ln2;
        RowMatrix f;
        RowMatrix u;
        RowMatrix g;
    };
    std::vector<Token> tokens;
    std::vector<Layer> layers;
    LayerNormCache lnf;
    RowMatrix final_out;
};

Denoiser::Denoiser(DenoiserParams params) : params_(std::move(params)) {
    const auto& c = params_.config();
    c.validate();
    positions_ = c.positional ? sinusoidal_positions(c.max_len, c.embed_dim) : RowMatrix::Zero(c.max_len, c.embed_dim);
}

DenoiserOutput Denoiser::forward(const ObservedSequence& x) const { return run(x, nullptr); }

DenoiserOutput Denoiser::run(const ObservedSequence& x, Cache* cache) const {
    const auto& c = params_.config();
    if (x.empty()) throw EmptySequenceError("denoiser input is empty");
    if (x.size() > max_len()) {
        throw Error("sequence of length " + std::to_string(x.size()) + " exceeds max_len " + std::to_string(c.max_len));
    }
    for (Token t : x.tokens) {
        if (t < 0 || t >= c.vocab_size()) throw FormatError("denoiser input holds a gap or unknown token");
    }

    const Slots s = resolve_slots(params_);
    const double* p = params_.values().data();
    auto mat = [p](std::size_t off, Eigen::Index r, Eigen::Index cols) { return ConstMatrixMap(p + off, r, cols); };
    auto vec = [p](std::size_t off, Eigen::Index n) { return ConstVectorMap(p + off, n); };

    const auto n = static_cast<Eigen::Index>(x.size());
    const Eigen::Index d = c.embed_dim;
    const Eigen::Index ff = c.ff_dim;
    const Eigen::Index heads = c.num_heads;
    const Eigen::Index dh = d / heads;
    const Eigen::Index vocab = c.vocab_size();
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    const auto emb = mat(s.tok_emb, vocab, d);
    RowMatrix h(n, d);
    for (Eigen::Index i = 0; i < n; ++i) h.row(i) = emb.row(x.tokens[static_cast<std::size_t>(i)]) + positions_.row(i);

    if (cache) {
        cache->tokens = x.tokens;
        cache->layers.assign(static_cast<std::size_t>(c.num_layers), {});
    }

    Cache::Layer scratch;
    for (int l = 0; l < c.num_layers; ++l) {
        const auto& ls = s.layers[static_cast<std::size_t>(l)];
        Cache::Layer& lc = cache ? cache->layers[static_cast<std::size_t>(l)] : scratch;
        lc.input = h;
        layer_norm(h, vec(ls.ln1_g, d), vec(ls.ln1_b, d), lc.ln1, lc.a);
        lc.q.noalias() = lc.a * mat(ls.wq, d, d);
        lc.q.rowwise() += vec(ls.bq, d);
        lc.k.noalias() = lc.a * mat(ls.wk, d, d);
        lc.k.rowwise() += vec(ls.bk, d);
        lc.v.noalias() = lc.a * mat(ls.wv, d, d);
        lc.v.rowwise() += vec(ls.bv, d);
        lc.attn.resize(n, d);
        lc.probs.resize(static_cast<std::size_t>(heads));
        for (Eigen::Index hd = 0; hd < heads; ++hd) {
            RowMatrix& prob = lc.probs[static_cast<std::size_t>(hd)];
            prob.noalias() = lc.q.middleCols(hd * dh, dh) * lc.k.middleCols(hd * dh, dh).transpose();
            prob *= scale;
            softmax_rows(prob);
            lc.attn.middleCols(hd * dh, dh).noalias() = prob * lc.v.middleCols(hd * dh, dh);
        }
        lc.mid = h;
        lc.mid.noalias() += lc.attn * mat(ls.wo, d, d);
        lc.mid.rowwise() += vec(ls.bo, d);
        layer_norm(lc.mid, vec(ls.ln2_g, d), vec(ls.ln2_b, d), lc.ln2, lc.f);
        lc.u.noalias() = lc.f * mat(ls.w1, d, ff);
        lc.u.rowwise() += vec(ls.b1, ff);
        lc.g = lc.u.unaryExpr([](double u) { return gelu(u); });
        h = lc.mid;
        h.noalias() += lc.g * mat(ls.w2, ff, d);
        h.rowwise() += vec(ls.b2, d);
    }

    LayerNormCache lnf_scratch;
    RowMatrix out_scratch;
    LayerNormCache& lnf = cache ? cache->lnf : lnf_scratch;
    RowMatrix& final_out = cache ? cache->final_out : out_scratch;
    layer_norm(h, vec(s.lnf_g, d), vec(s.lnf_b, d), lnf, final_out);

    DenoiserOutput out;
    out.sub_logits.noalias() = final_out * mat(s.sub_w, d, vocab);
    out.sub_logits.rowwise() += vec(s.sub_b, vocab);
    out.del_logits = ((final_out * mat(s.del_w, d, 1)).col(0).array() + p[s.del_b]).matrix();
    out.ins_logits = ((final_out * mat(s.ins_w, d, 1)).col(0).array() + p[s.ins_b]).matrix();
    return out;
}

void Denoiser::backward(const Cache& cache, const DenoiserOutput& dlogits, std::span<double> grad) const {
    const auto& c = params_.config();
    const Slots s = resolve_slots(params_);
    const double* p = params_.values().data();
    double* g = grad.data();
    auto mat = [p](std::size_t off, Eigen::Index r, Eigen::Index cols) { return ConstMatrixMap(p + off, r, cols); };
    auto vec = [p](std::size_t off, Eigen::Index n) { return ConstVectorMap(p + off, n); };
    auto gmat = [g](std::size_t off, Eigen::Index r, Eigen::Index cols) { return MatrixMap(g + off, r, cols); };
    auto gvec = [g](std::size_t off, Eigen::Index n) { return VectorMap(g + off, n); };

    const auto n = static_cast<Eigen::Index>(cache.tokens.size());
    const Eigen::Index d = c.embed_dim;
    const Eigen::Index ff = c.ff_dim;
    const Eigen::Index heads = c.num_heads;
    const Eigen::Index dh = d / heads;
    const Eigen::Index vocab = c.vocab_size();
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    // Heads.
    gmat(s.sub_w, d, vocab).noalias() += cache.final_out.transpose() * dlogits.sub_logits;
    gvec(s.sub_b, vocab) += dlogits.sub_logits.colwise().sum();
    gmat(s.del_w, d, 1).noalias() += cache.final_out.transpose() * dlogits.del_logits;
    g[s.del_b] += dlogits.del_logits.sum();
    gmat(s.ins_w, d, 1).noalias() += cache.final_out.transpose() * dlogits.ins_logits;
    g[s.ins_b] += dlogits.ins_logits.sum();

    RowMatrix dfinal = dlogits.sub_logits * mat(s.sub_w, d, vocab).transpose();
    dfinal.noalias() += dlogits.del_logits * mat(s.del_w, d, 1).transpose();
    dfinal.noalias() += dlogits.ins_logits * mat(s.ins_w, d, 1).transpose();
    RowMatrix dh_res = layer_norm_backward(dfinal, cache.lnf, vec(s.lnf_g, d), gvec(s.lnf_g, d), gvec(s.lnf_b, d));

    for (int l = c.num_layers - 1; l >= 0; --l) {
        const auto& ls = s.layers[static_cast<std::size_t>(l)];
        const Cache::Layer& lc = cache.layers[static_cast<std::size_t>(l)];

        // Feed-forward block: h = mid + gelu(ln2(mid) W1 + b1) W2 + b2.
        gmat(ls.w2, ff, d).noalias() += lc.g.transpose() * dh_res;
        gvec(ls.b2, d) += dh_res.colwise().sum();
        RowMatrix du = dh_res * mat(ls.w2, ff, d).transpose();
        du.array() *= lc.u.unaryExpr([](double u) { return gelu_grad(u); }).array();
        gmat(ls.w1, d, ff).noalias() += lc.f.transpose() * du;
        gvec(ls.b1, ff) += du.colwise().sum();
        const RowMatrix df = du * mat(ls.w1, d, ff).transpose();
        RowMatrix dmid = dh_res + layer_norm_backward(df, lc.ln2, vec(ls.ln2_g, d), gvec(ls.ln2_g, d), gvec(ls.ln2_b, d));

        // Attention block: mid = h + attn Wo + bo.
        gmat(ls.wo, d, d).noalias() += lc.attn.transpose() * dmid;
        gvec(ls.bo, d) += dmid.colwise().sum();
        const RowMatrix dattn = dmid * mat(ls.wo, d, d).transpose();
        RowMatrix dq(n, d), dk(n, d), dv(n, d);
        for (Eigen::Index hd = 0; hd < heads; ++hd) {
            const RowMatrix& prob = lc.probs[static_cast<std::size_t>(hd)];
            const auto dout = dattn.middleCols(hd * dh, dh);
            RowMatrix dprob = dout * lc.v.middleCols(hd * dh, dh).transpose();
            dv.middleCols(hd * dh, dh).noalias() = prob.transpose() * dout;
            // Softmax backward, row-wise.
            const Eigen::VectorXd inner = dprob.cwiseProduct(prob).rowwise().sum();
            RowMatrix dscore = prob.cwiseProduct((dprob.colwise() - inner));
            dscore *= scale;
            dq.middleCols(hd * dh, dh).noalias() = dscore * lc.k.middleCols(hd * dh, dh);
            dk.middleCols(hd * dh, dh).noalias() = dscore.transpose() * lc.q.middleCols(hd * dh, dh);
        }
        gmat(ls.wq, d, d).noalias() += lc.a.transpose() * dq;
        gvec(ls.bq, d) += dq.colwise().sum();
        gmat(ls.wk, d, d).noalias() += lc.a.transpose() * dk;
        gvec(ls.bk, d) += dk.colwise().sum();
        gmat(ls.wv, d, d).noalias() += lc.a.transpose() * dv;
        gvec(ls.bv, d) += dv.colwise().sum();
        RowMatrix da = dq * mat(ls.wq, d, d).transpose();
        da.noalias() += dk * mat(ls.wk, d, d).transpose();
        da.noalias() += dv * mat(ls.wv, d, d).transpose();
        dh_res = dmid + layer_norm_backward(da, lc.ln1, vec(ls.ln1_g, d), gvec(ls.ln1_g, d), gvec(ls.ln1_b, d));
    }

    auto demb = gmat(s.tok_emb, vocab, d);
    for (Eigen::Index i = 0; i < n; ++i) demb.row(cache.tokens[static_cast<std::size_t>(i)]) += dh_res.row(i);
}

LossBreakdown Denoiser::accumulate_gradient(const LabeledExample& example, const HeadWeights& weights,
                                            std::span<double> grad) const {
    if (grad.size() != params_.count()) throw Error("gradient buffer has the wrong size");
    Cache cache;
    const DenoiserOutput out = run(example.input, &cache);
    DenoiserOutput dlogits;
    const LossBreakdown loss = decomposed_losses(out, example.targets, weights, example.lambda, &dlogits);
    backward(cache, dlogits, grad);
    return loss;
}

std::pair<LossBreakdown, Gradients> loss_and_gradients(const Denoiser& model, const TrainBatch& batch,
                                                       const HeadWeights& weights, int threads) {
    if (batch.empty()) throw Error("empty training batch");
    const std::size_t count = model.params().count();
    std::vector<Gradients> per_example(batch.size());
    std::vector<LossBreakdown> losses(batch.size());
    parallel_for(batch.size(), threads, [&](std::size_t i) {
        per_example[i].assign(count, 0.0);
        losses[i] = model.accumulate_gradient(batch[i], weights, per_example[i]);
    });

    const double inv = 1.0 / static_cast<double>(batch.size());
    Gradients grad(count, 0.0);
    LossBreakdown total;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        for (std::size_t j = 0; j < count; ++j) grad[j] += per_example[i][j];
        total += losses[i];
    }
    for (double& v : grad) {
        v *= inv;
        if (!std::isfinite(v)) throw DivergenceError("non-finite gradient");
    }
    total /= static_cast<double>(batch.size());
    return {total, std::move(grad)};
}

LossBreakdown evaluate_loss(const Denoiser& model, const TrainBatch& batch, const HeadWeights& weights, int threads) {
    if (batch.empty()) throw Error("empty evaluation batch");
    std::vector<LossBreakdown> losses(batch.size());
    parallel_for(batch.size(), threads, [&](std::size_t i) {
        losses[i] = decomposed_losses(model.forward(batch[i].input), batch[i].targets, weights, batch[i].lambda);
    });
    LossBreakdown total;
    for (const auto& l : losses) total += l;
    total /= static_cast<double>(batch.size());
    return total;
}

}  // namespace editdiff
