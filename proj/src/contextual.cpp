#include "editdiff/contextual.hpp"

#include "editdiff/error.hpp"

namespace editdiff {

ContextualRows contextual_rows_for(const HeadModel& model, const LatentAlignment& z0, std::vector<bool> corrupted) {
    if (corrupted.size() != z0.size()) throw Error("corruption coins do not match the alignment length");
    const Token k = model.residues();
    const Token gap = k + 1;
    ContextualRows out;
    out.corrupted = std::move(corrupted);

    ObservedSequence context;
    std::vector<std::size_t> observed_pos;
    for (std::size_t j = 0; j < z0.size(); ++j) {
        const Token tok = z0.tokens[j];
        if (tok == gap) continue;
        if (tok < 0 || tok > k) throw Error("alignment token outside the model vocabulary");
        const bool hide = out.corrupted[j] && tok < k;
        if (hide) {
            out.slots.push_back(j);
            observed_pos.push_back(context.size());
        }
        context.tokens.push_back(hide ? k : tok);
    }
    if (out.slots.empty()) return out;
    const DenoiserOutput pred = model.forward(context);
    out.rows.reserve(out.slots.size());
    for (std::size_t i : observed_pos) out.rows.push_back(pred.residue_probs(i));
    return out;
}

ContextualRows contextual_substitution_rows(const HeadModel& model, const LatentAlignment& z0, int t,
                                            const NoiseSchedule& schedule, Rng& rng) {
    if (t < 0 || t > schedule.steps) throw Error("timestep outside the schedule");
    return contextual_rows_for(model, z0, corruption_flags(z0.size(), t, schedule, rng));
}

LatentAlignment apply_contextual_noise(const LatentAlignment& z0, const ContextualRows& rows,
                                       const KernelParams& params, int residues, Rng& rng) {
    params.validate();
    const Token k = residues;
    const Token gap = k + 1;
    LatentAlignment zt = z0;
    std::vector<Distribution> gated;
    if (!rows.rows.empty()) gated = confidence_gate(rows.rows, params.rho_mask);
    std::size_t next = 0;
    for (std::size_t j = 0; j < z0.size(); ++j) {
        if (!rows.corrupted[j]) continue;
        const Token tok = z0.tokens[j];
        if (tok == gap) {
            if (rng.bernoulli(params.omega_ins)) zt.tokens[j] = static_cast<Token>(rng.index(static_cast<std::size_t>(k)));
        } else if (tok < k) {
            const Distribution& row = gated.at(next++);
            if (rng.bernoulli(params.omega_del)) {
                zt.tokens[j] = gap;
            } else {
                zt.tokens[j] = static_cast<Token>(rng.categorical(row));
            }
        }
    }
    return zt;
}

LatentAlignment contextual_forward_noise(const HeadModel& model, const LatentAlignment& z0, int t,
                                         const NoiseSchedule& schedule, const KernelParams& params, Rng& rng) {
    const ContextualRows rows = contextual_substitution_rows(model, z0, t, schedule, rng);
    return apply_contextual_noise(z0, rows, params, model.residues(), rng);
}

}  // namespace editdiff
