#pragma once

#include <vector>

#include "editdiff/rng.hpp"
#include "editdiff/sequence.hpp"

namespace editdiff {

struct ProfileHyper {
    int residues = 20;
    double core_fraction = 0.3;
    double core_mass = 0.97;       ///< probability of the modal residue at a core position
    double concentration = 0.5;    ///< Dirichlet concentration of non-core emissions
    double background_concentration = 5.0;
    double mean_del = 0.02;        ///< per-position rates are uniform on [0, 2*mean]
    double mean_ins = 0.02;

    void validate() const;
};

/// Position-specific family model: each reference position is either
/// deleted or emits one residue, and after every emitted position a
/// geometric run of background residues may be inserted.
struct ProfileModel {
    int residues = 20;
    std::vector<std::vector<double>> emissions;  ///< L_ref rows of size K
    std::vector<double> p_del;
    std::vector<double> p_ins;
    std::vector<double> background;
    std::vector<std::size_t> core;  ///< ascending reference positions (0-based)

    std::size_t length() const { return emissions.size(); }
    bool is_core(std::size_t i) const;
    Token modal(std::size_t i) const;
    void validate() const;
};

ProfileModel sample_profile(std::size_t l_ref, const ProfileHyper& hyper, Rng& rng);

/// One generation path: for each reference position the emitted sequence
/// index (-1 when deleted) and the inserted run length after it.
struct ProfilePath {
    std::vector<int> match;
    std::vector<int> inserted;
};

struct ProfileDraw {
    ObservedSequence sequence;
    ProfilePath path;
};

/// Resamples empty draws up to 100 times, then throws.
ProfileDraw sample_with_path(const ProfileModel& profile, Rng& rng);
ObservedSequence sample_sequence(const ProfileModel& profile, Rng& rng);

/// Log-probability of generating `seq` along `path`.
double path_loglik(const ProfileModel& profile, const ObservedSequence& seq, const ProfilePath& path);

struct ProfileAlignment {
    double loglik = 0.0;
    ProfilePath path;
};

/// Best-path (Viterbi) alignment in O(L_ref * |seq|).
ProfileAlignment align_to_profile(const ProfileModel& profile, const ObservedSequence& seq);
double loglik(const ProfileModel& profile, const ObservedSequence& seq);

/// Expected sequence length (insertions only follow emitted positions).
double expected_length(const ProfileModel& profile);

/// Residue frequencies implied by the profile (used as the corpus unigram).
std::vector<double> expected_unigram(const ProfileModel& profile);

}  // namespace editdiff
