#pragma once

#include <span>
#include <string>
#include <vector>

#include "editdiff/edit_script.hpp"
#include "editdiff/model.hpp"

namespace editdiff {

/// One substitution in 1-based wild-type coordinates.
struct PointMutation {
    std::size_t pos = 0;
    Token wt = 0;
    Token mut = 0;

    bool operator==(const PointMutation&) const = default;
};

using MutationSet = std::vector<PointMutation>;

/// Throws FormatError on out-of-range or repeated positions and on wild-type
/// residues that disagree with `wt`.
void check_mutations(const ObservedSequence& wt, const MutationSet& muts);

/// "A42G:K100R" (empty string for no mutations).
MutationSet parse_point_mutations(const std::string& text, const Alphabet& alphabet);
std::string format_point_mutations(const MutationSet& muts, const Alphabet& alphabet);

EditScript to_edit_script(const MutationSet& muts);

/// Sum over sites of log p(mut | wt) - log p(wt | wt), read from one forward
/// pass on the unmodified wild type, renormalized over residues.
double substitution_score(const HeadModel& model, const ObservedSequence& wt, const MutationSet& muts);
double substitution_score(const DenoiserOutput& wt_out, const ObservedSequence& wt, const MutationSet& muts);

/// Same log-odds with the mutated sites masked in the input.
double masked_substitution_score(const HeadModel& model, const ObservedSequence& wt, const MutationSet& muts);

/// Deletion logit at each deleted residue, insertion logit of the residue
/// left of each insertion point (position 1 for insertions before the first
/// residue), plus log-odds for substitutions; one forward pass on wt.
double indel_score(const HeadModel& model, const ObservedSequence& wt, const EditScript& script);
double indel_score(const DenoiserOutput& wt_out, const ObservedSequence& wt, const EditScript& script);

/// Parses a variant given as point mutations ("A42G:K100R"), an edit script
/// ("del42;insA101;sub7K>R") or a full mutant sequence (scored through its
/// Levenshtein script). Empty text means the wild type itself.
EditScript parse_variant(const std::string& text, const ObservedSequence& wt, const Alphabet& alphabet);

/// Average ranks (1-based) with ties sharing their mean rank.
std::vector<double> average_ranks(std::span<const double> xs);

/// Spearman rank correlation. Throws on length mismatch, empty input or
/// constant ranks.
double spearman(std::span<const double> xs, std::span<const double> ys);

}  // namespace editdiff
