#include "editdiff/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <string>

#include "editdiff/error.hpp"
#include "editdiff/parallel.hpp"

namespace editdiff {

std::vector<std::size_t> ProfileOracle::core_sites(const ObservedSequence& x) const {
    const ProfileAlignment aln = align_to_profile(profile_, x);
    std::vector<std::size_t> sites;
    for (std::size_t i : profile_.core) {
        if (aln.path.match[i] >= 0) sites.push_back(static_cast<std::size_t>(aln.path.match[i]));
    }
    return sites;
}

bool ProfileOracle::accept(const ObservedSequence& x) const {
    const ProfileAlignment aln = align_to_profile(profile_, x);
    if (!std::isfinite(aln.loglik)) return false;
    for (std::size_t i : profile_.core) {
        const int j = aln.path.match[i];
        if (j < 0 || x[static_cast<std::size_t>(j)] != profile_.modal(i)) return false;
    }
    return true;
}

double ProfileOracle::score(const ObservedSequence& x) const { return loglik(profile_, x); }

std::string_view proposer_name(Proposer p) { return p == Proposer::model ? "model" : "uniform"; }

Proposer parse_proposer(std::string_view name) {
    if (name == "model") return Proposer::model;
    if (name == "uniform") return Proposer::uniform;
    throw Error("unknown proposer '" + std::string(name) + "' (expected model or uniform)");
}

void EvolveConfig::validate() const {
    if (iterations < 0) throw Error("iterations must be non-negative");
    if (width < 1 || beam < 1) throw Error("search width and beam size must be positive");
    if (!(tau_del > 0.0 && tau_del < 1.0) || !(tau_ins > 0.0 && tau_ins < 1.0)) {
        throw Error("indel thresholds must lie in (0, 1)");
    }
}

namespace {

Token draw_other(std::vector<double> probs, Token current, Rng& rng) {
    probs[static_cast<std::size_t>(current)] = 0.0;
    const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
    if (!(total > 0.0)) {
        std::fill(probs.begin(), probs.end(), 1.0);
        probs[static_cast<std::size_t>(current)] = 0.0;
    }
    return static_cast<Token>(rng.categorical(probs));
}

Proposal make_substitution(const ObservedSequence& x, const std::vector<bool>& protect, std::size_t j, Token tok) {
    Proposal p{x, EditOp::substitute(j + 1, x[j], tok), protect};
    p.seq.tokens[j] = tok;
    return p;
}

Proposal make_deletion(const ObservedSequence& x, const std::vector<bool>& protect, std::size_t j) {
    Proposal p{x, EditOp::remove(j + 1, x[j]), protect};
    p.seq.tokens.erase(p.seq.tokens.begin() + static_cast<std::ptrdiff_t>(j));
    p.protect.erase(p.protect.begin() + static_cast<std::ptrdiff_t>(j));
    return p;
}

/// New residue lands at index `at` (0..n).
Proposal make_insertion(const ObservedSequence& x, const std::vector<bool>& protect, std::size_t at, Token tok) {
    Proposal p{x, EditOp::insert(at, tok), protect};
    p.seq.tokens.insert(p.seq.tokens.begin() + static_cast<std::ptrdiff_t>(at), tok);
    p.protect.insert(p.protect.begin() + static_cast<std::ptrdiff_t>(at), false);
    return p;
}

}  // namespace

std::vector<Proposal> propose_variants(const HeadModel* model, const ObservedSequence& x,
                                       const std::vector<bool>& protect, std::size_t width, const EvolveConfig& config,
                                       int residues, Rng& rng) {
    if (x.empty()) throw Error("cannot propose variants of an empty sequence");
    if (protect.size() != x.size()) throw Error("protection mask does not match the sequence");
    if (config.proposer == Proposer::model && model == nullptr) throw Error("the model proposer needs a model");
    const auto k = static_cast<std::size_t>(residues);
    std::vector<std::size_t> open;
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (!protect[j]) open.push_back(j);
    }

    std::vector<Proposal> out;
    out.reserve(width);
    if (config.proposer == Proposer::uniform) {
        if (open.empty() && !config.allow_indels) throw Error("no editable positions");
        for (std::size_t w = 0; w < width; ++w) {
            const bool indel = config.allow_indels && (open.empty() || rng.bernoulli(0.5));
            if (!indel) {
                const std::size_t j = open[rng.index(open.size())];
                std::vector<double> flat(k, 1.0);
                out.push_back(make_substitution(x, protect, j, draw_other(flat, x[j], rng)));
            } else if (x.size() > 1 && !open.empty() && rng.bernoulli(0.5)) {
                out.push_back(make_deletion(x, protect, open[rng.index(open.size())]));
            } else {
                const std::size_t at = rng.index(x.size() + 1);
                out.push_back(make_insertion(x, protect, at, static_cast<Token>(rng.index(k))));
            }
        }
        return out;
    }

    const DenoiserOutput pred = model->forward(x);
    std::vector<std::size_t> dels, ins;
    if (config.allow_indels) {
        for (std::size_t j : open) {
            if (x.size() > 1 && sigmoid(pred.del_logits(static_cast<Eigen::Index>(j))) > config.tau_del) dels.push_back(j);
        }
        for (std::size_t j = 0; j < x.size(); ++j) {
            if (x.size() < model->max_len() && sigmoid(pred.ins_logits(static_cast<Eigen::Index>(j))) > config.tau_ins) {
                ins.push_back(j);
            }
        }
    }
    const std::size_t n_indel = dels.size() + ins.size();
    if (open.empty() && n_indel == 0) throw Error("no editable positions");
    std::map<std::size_t, std::vector<double>> fill_cache;
    for (std::size_t w = 0; w < width; ++w) {
        const bool indel = n_indel > 0 && (open.empty() || rng.bernoulli(0.5));
        if (!indel) {
            const std::size_t j = open[rng.index(open.size())];
            out.push_back(make_substitution(x, protect, j, draw_other(pred.residue_probs(j), x[j], rng)));
            continue;
        }
        const std::size_t pick = rng.index(n_indel);
        if (pick < dels.size()) {
            out.push_back(make_deletion(x, protect, dels[pick]));
            continue;
        }
        const std::size_t j = ins[pick - dels.size()];
        auto it = fill_cache.find(j);
        if (it == fill_cache.end()) {
            ObservedSequence probe = x;
            probe.tokens.insert(probe.tokens.begin() + static_cast<std::ptrdiff_t>(j + 1), static_cast<Token>(residues));
            it = fill_cache.emplace(j, model->forward(probe).residue_probs(j + 1)).first;
        }
        out.push_back(make_insertion(x, protect, j + 1, static_cast<Token>(rng.categorical(it->second))));
    }
    return out;
}

EvolveResult evolve(const ObservedSequence& templ, const std::vector<std::size_t>& protected_positions,
                    const EvolveConfig& config, const Oracle& oracle, const HeadModel* model, int residues) {
    config.validate();
    if (templ.empty()) throw Error("template is empty");
    if (!oracle.accept(templ)) throw Error("template does not pass the oracle filter");
    EvolveResult result;
    Candidate root;
    root.seq = templ;
    root.score = oracle.score(templ);
    root.protect.assign(templ.size(), false);
    for (std::size_t p : protected_positions) {
        if (p >= templ.size()) throw Error("protected position " + std::to_string(p) + " outside the template");
        root.protect[p] = true;
    }
    result.template_score = root.score;
    result.archive.push_back(root);
    result.beam.push_back(root);

    Rng rng(config.seed);
    for (int it = 1; it <= config.iterations; ++it) {
        const std::size_t nb = result.beam.size();
        std::vector<std::uint64_t> seeds(nb);
        for (auto& s : seeds) s = rng.split();
        std::vector<std::vector<Proposal>> proposed(nb);
        parallel_for(nb, config.threads, [&](std::size_t b) {
            Rng local(seeds[b]);
            proposed[b] = propose_variants(model, result.beam[b].seq, result.beam[b].protect, config.width, config,
                                           residues, local);
        });

        std::set<std::vector<Token>> seen;
        if (config.retain_parents) {
            for (const auto& c : result.beam) seen.insert(c.seq.tokens);
        }
        std::vector<Candidate> pool;
        for (std::size_t b = 0; b < nb; ++b) {
            for (auto& p : proposed[b]) {
                if (!seen.insert(p.seq.tokens).second) continue;
                Candidate c;
                c.seq = std::move(p.seq);
                c.parent = result.beam[b].id;
                c.edit = p.edit;
                c.iteration = it;
                c.protect = std::move(p.protect);
                pool.push_back(std::move(c));
            }
        }
        std::vector<std::uint8_t> ok(pool.size(), 0);
        parallel_for(pool.size(), config.threads, [&](std::size_t i) {
            ok[i] = oracle.accept(pool[i].seq) ? 1 : 0;
            if (ok[i]) pool[i].score = oracle.score(pool[i].seq);
        });

        IterationStats stats;
        stats.iteration = it;
        std::vector<Candidate> entries;
        for (std::size_t i = 0; i < pool.size(); ++i) {
            if (ok[i]) {
                entries.push_back(std::move(pool[i]));
            } else {
                ++stats.n_filtered;
            }
        }
        stats.pool_size = entries.size();
        if (entries.empty()) {
            stats.kept_parents = true;
            entries = result.beam;
        } else if (config.retain_parents) {
            entries.insert(entries.end(), result.beam.begin(), result.beam.end());
        }
        std::stable_sort(entries.begin(), entries.end(),
                         [](const Candidate& a, const Candidate& b) { return a.score > b.score; });
        if (entries.size() > config.beam) entries.resize(config.beam);
        for (auto& c : entries) {
            if (c.iteration == it) {
                c.id = result.archive.size();
                result.archive.push_back(c);
            }
        }
        result.beam = std::move(entries);
        stats.best_score = result.beam.front().score;
        double total = 0.0;
        for (const auto& c : result.beam) total += c.score;
        stats.mean_score = total / static_cast<double>(result.beam.size());
        result.history.push_back(stats);
    }
    return result;
}

ObservedSequence reconstruct(const EvolveResult& result, std::size_t id) {
    std::vector<EditOp> edits;
    std::size_t cur = id;
    while (true) {
        const Candidate& c = result.archive.at(cur);
        if (!c.parent) break;
        edits.push_back(*c.edit);
        cur = *c.parent;
    }
    ObservedSequence x = result.archive.at(cur).seq;
    for (auto e = edits.rbegin(); e != edits.rend(); ++e) x = apply_edit_script(x, {*e});
    return x;
}

}  // namespace editdiff
