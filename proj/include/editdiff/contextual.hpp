#pragma once

#include <vector>

#include "editdiff/kernels.hpp"
#include "editdiff/model.hpp"

namespace editdiff {

/// Model-derived substitution rows for one latent alignment.
struct ContextualRows {
    std::vector<bool> corrupted;      ///< per latent slot, the shared corruption coins
    std::vector<std::size_t> slots;   ///< latent slots of corrupted residues, ascending
    std::vector<Distribution> rows;   ///< residue distribution (size K) for each entry of `slots`
};

/// Rows for a fixed set of corruption coins. The auxiliary context is the
/// observed sequence of z0 with every corrupted residue replaced by mask; one
/// forward pass yields the substitution head's residue distribution at each
/// corrupted residue.
ContextualRows contextual_rows_for(const HeadModel& model, const LatentAlignment& z0, std::vector<bool> corrupted);

/// Draws the coins at level t (keep with alpha_bar(t)) and evaluates the rows.
ContextualRows contextual_substitution_rows(const HeadModel& model, const LatentAlignment& z0, int t,
                                            const NoiseSchedule& schedule, Rng& rng);

/// Forward noise with the gated contextual kernel: a corrupted residue
/// becomes a gap with w_del, else a draw from its gated row (mask for the
/// least confident rho_mask fraction). Corrupted gaps follow the static gap
/// column (each residue w_ins/K, stay gap 1-w_ins).
LatentAlignment contextual_forward_noise(const HeadModel& model, const LatentAlignment& z0, int t,
                                         const NoiseSchedule& schedule, const KernelParams& params, Rng& rng);

/// Same, with precomputed rows.
LatentAlignment apply_contextual_noise(const LatentAlignment& z0, const ContextualRows& rows,
                                       const KernelParams& params, int residues, Rng& rng);

}  // namespace editdiff
