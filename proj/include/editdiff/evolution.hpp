#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "editdiff/edit_script.hpp"
#include "editdiff/model.hpp"
#include "editdiff/profile.hpp"

namespace editdiff {

/// Fitness oracle: a hard filter and a score where higher is better. Both
/// must be deterministic per sequence and safe to call concurrently.
class Oracle {
public:
    virtual ~Oracle() = default;
    virtual bool accept(const ObservedSequence& x) const = 0;
    virtual double score(const ObservedSequence& x) const = 0;
};

/// Score = best-path profile log-likelihood; filter = every core position
/// of the profile is matched by its modal residue on that path.
class ProfileOracle final : public Oracle {
public:
    explicit ProfileOracle(ProfileModel profile) : profile_(std::move(profile)) {}

    bool accept(const ObservedSequence& x) const override;
    double score(const ObservedSequence& x) const override;
    const ProfileModel& profile() const { return profile_; }

    /// Sequence indices of x aligned to core positions (unmatched ones skipped).
    std::vector<std::size_t> core_sites(const ObservedSequence& x) const;

private:
    ProfileModel profile_;
};

enum class Proposer { model, uniform };

std::string_view proposer_name(Proposer p);
Proposer parse_proposer(std::string_view name);

struct EvolveConfig {
    int iterations = 20;
    std::size_t width = 100;
    std::size_t beam = 10;
    bool retain_parents = true;
    bool allow_indels = false;
    Proposer proposer = Proposer::model;
    double tau_del = 0.7;
    double tau_ins = 0.7;
    std::uint64_t seed = 0;
    int threads = 1;

    void validate() const;
};

/// A single-edit variant of a parent. `edit` is in parent coordinates.
struct Proposal {
    ObservedSequence seq;
    EditOp edit;
    std::vector<bool> protect;  ///< per position of seq
};

/// `width` single-edit variants of x; protected positions are never touched.
/// With Proposer::model a substitution site is uniform among unprotected
/// positions and the residue comes from the substitution head excluding the
/// current one; indels (when allowed) are drawn among sites whose head
/// probability exceeds its threshold. Proposer::uniform draws sites and
/// residues uniformly. `model` may be null for the uniform proposer.
std::vector<Proposal> propose_variants(const HeadModel* model, const ObservedSequence& x,
                                       const std::vector<bool>& protect, std::size_t width, const EvolveConfig& config,
                                       int residues, Rng& rng);

struct Candidate {
    std::size_t id = 0;  ///< index into EvolveResult::archive
    ObservedSequence seq;
    double score = 0.0;
    std::optional<std::size_t> parent;
    std::optional<EditOp> edit;
    int iteration = 0;
    std::vector<bool> protect;
};

struct IterationStats {
    int iteration = 0;
    double best_score = 0.0;
    double mean_score = 0.0;
    std::size_t pool_size = 0;
    std::size_t n_filtered = 0;
    bool kept_parents = false;  ///< every proposal was filtered out
};

struct EvolveResult {
    std::vector<Candidate> beam;     ///< best first
    std::vector<IterationStats> history;
    std::vector<Candidate> archive;  ///< every candidate that entered a beam
    double template_score = 0.0;
};

/// Beam search (propose, filter, score, keep top-b). Throws if the template
/// fails the filter.
EvolveResult evolve(const ObservedSequence& templ, const std::vector<std::size_t>& protected_positions,
                    const EvolveConfig& config, const Oracle& oracle, const HeadModel* model, int residues);

/// Rebuilds a candidate by applying its lineage edits to the template.
ObservedSequence reconstruct(const EvolveResult& result, std::size_t id);

}  // namespace editdiff
