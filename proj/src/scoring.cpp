#include "editdiff/scoring.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <set>

#include "editdiff/error.hpp"

namespace editdiff {

void check_mutations(const ObservedSequence& wt, const MutationSet& muts) {
    std::set<std::size_t> seen;
    for (const auto& m : muts) {
        if (m.pos < 1 || m.pos > wt.size()) {
            throw FormatError("mutation position " + std::to_string(m.pos) + " outside the wild type of length " +
                              std::to_string(wt.size()));
        }
        if (!seen.insert(m.pos).second) throw FormatError("mutation position " + std::to_string(m.pos) + " repeated");
        if (wt[m.pos - 1] != m.wt) {
            throw FormatError("wild-type residue mismatch at position " + std::to_string(m.pos));
        }
    }
}

MutationSet parse_point_mutations(const std::string& text, const Alphabet& alphabet) {
    MutationSet out;
    if (text.empty()) return out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t end = std::min(text.find(':', start), text.size());
        const std::string item = text.substr(start, end - start);
        if (item.size() < 3 || !std::all_of(item.begin() + 1, item.end() - 1, [](unsigned char c) { return std::isdigit(c); })) {
            throw FormatError("malformed point mutation '" + item + "' (expected e.g. A42G)");
        }
        PointMutation m;
        m.wt = alphabet.from_char(item.front());
        m.mut = alphabet.from_char(item.back());
        m.pos = std::stoul(item.substr(1, item.size() - 2));
        out.push_back(m);
        start = end + 1;
    }
    return out;
}

std::string format_point_mutations(const MutationSet& muts, const Alphabet& alphabet) {
    std::string out;
    for (std::size_t i = 0; i < muts.size(); ++i) {
        if (i) out += ':';
        out += alphabet.to_char(muts[i].wt);
        out += std::to_string(muts[i].pos);
        out += alphabet.to_char(muts[i].mut);
    }
    return out;
}

EditScript to_edit_script(const MutationSet& muts) {
    EditScript script;
    for (const auto& m : muts) script.push_back(EditOp::substitute(m.pos, m.wt, m.mut));
    return script;
}

double substitution_score(const DenoiserOutput& wt_out, const ObservedSequence& wt, const MutationSet& muts) {
    check_mutations(wt, muts);
    if (wt_out.length() != wt.size()) throw Error("model output does not match the wild type");
    double score = 0.0;
    for (const auto& m : muts) {
        if (m.mut == m.wt) continue;
        score += wt_out.residue_log_prob(m.pos - 1, m.mut) - wt_out.residue_log_prob(m.pos - 1, m.wt);
    }
    return score;
}

double substitution_score(const HeadModel& model, const ObservedSequence& wt, const MutationSet& muts) {
    check_mutations(wt, muts);
    return substitution_score(model.forward(wt), wt, muts);
}

double masked_substitution_score(const HeadModel& model, const ObservedSequence& wt, const MutationSet& muts) {
    check_mutations(wt, muts);
    ObservedSequence masked = wt;
    for (const auto& m : muts) masked.tokens[m.pos - 1] = static_cast<Token>(model.residues());
    const DenoiserOutput out = model.forward(masked);
    double score = 0.0;
    for (const auto& m : muts) {
        if (m.mut == m.wt) continue;
        score += out.residue_log_prob(m.pos - 1, m.mut) - out.residue_log_prob(m.pos - 1, m.wt);
    }
    return score;
}

double indel_score(const DenoiserOutput& wt_out, const ObservedSequence& wt, const EditScript& script) {
    if (wt_out.length() != wt.size()) throw Error("model output does not match the wild type");
    apply_edit_script(wt, script);  // validates positions and residues
    double score = 0.0;
    for (const auto& op : script) {
        switch (op.kind) {
            case EditKind::remove:
                score += wt_out.del_logits(static_cast<Eigen::Index>(op.pos - 1));
                break;
            case EditKind::insert: {
                const std::size_t left = op.pos == 0 ? 0 : op.pos - 1;
                score += wt_out.ins_logits(static_cast<Eigen::Index>(left));
                break;
            }
            case EditKind::substitute:
                if (op.new_token != wt[op.pos - 1]) {
                    score += wt_out.residue_log_prob(op.pos - 1, op.new_token) -
                             wt_out.residue_log_prob(op.pos - 1, wt[op.pos - 1]);
                }
                break;
        }
    }
    return score;
}

double indel_score(const HeadModel& model, const ObservedSequence& wt, const EditScript& script) {
    apply_edit_script(wt, script);
    return indel_score(model.forward(wt), wt, script);
}

EditScript parse_variant(const std::string& text, const ObservedSequence& wt, const Alphabet& alphabet) {
    if (text.empty()) return {};
    const bool has_digit = std::any_of(text.begin(), text.end(), [](unsigned char c) { return std::isdigit(c); });
    if (!has_digit) {
        ObservedSequence mut{alphabet.encode(text)};
        return levenshtein_edit_script(wt, mut);
    }
    const bool script_like = text.rfind("sub", 0) == 0 || text.rfind("del", 0) == 0 || text.rfind("ins", 0) == 0;
    EditScript script = script_like ? parse_edit_script(text, alphabet) : to_edit_script(parse_point_mutations(text, alphabet));
    apply_edit_script(wt, script);
    return script;
}

std::vector<double> average_ranks(std::span<const double> xs) {
    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(xs.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw Error("spearman inputs differ in length");
    if (xs.empty()) throw Error("spearman needs at least one pair");
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) throw Error("spearman inputs must be finite");
    }
    const auto rx = average_ranks(xs);
    const auto ry = average_ranks(ys);
    const double n = static_cast<double>(xs.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) throw Error("spearman is undefined for constant input");
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace editdiff
