#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "editdiff/alphabet.hpp"
#include "editdiff/rng.hpp"

namespace editdiff {

/// A variable-length sequence over residues and mask; never holds a gap.
struct ObservedSequence {
    std::vector<Token> tokens;

    std::size_t size() const noexcept { return tokens.size(); }
    bool empty() const noexcept { return tokens.empty(); }
    Token operator[](std::size_t i) const { return tokens[i]; }
    bool operator==(const ObservedSequence&) const = default;
};

/// A latent alignment: residues, masks and gap slots. Training alignments of a
/// length-L sequence have exactly 2L slots.
struct LatentAlignment {
    std::vector<Token> tokens;

    std::size_t size() const noexcept { return tokens.size(); }
    Token operator[](std::size_t i) const { return tokens[i]; }
    bool operator==(const LatentAlignment&) const = default;
};

/// Latent index of the k-th non-gap token (0-based on both sides).
using IndexMap = std::vector<std::size_t>;

/// Drop every gap. Throws EmptySequenceError if nothing is left.
ObservedSequence collapse(const LatentAlignment& z, const Alphabet& alphabet);

/// Number of non-gap slots; never throws.
std::size_t collapsed_length(const LatentAlignment& z, const Alphabet& alphabet);

/// One gap slot after every token: [A,B,C] -> [A,-,B,-,C,-].
LatentAlignment canonical_expand(const ObservedSequence& x, const Alphabet& alphabet);

/// Uniformly random interleaving of x with exactly |x| gaps.
LatentAlignment random_alignment(const ObservedSequence& x, const Alphabet& alphabet, Rng& rng);

IndexMap index_map(const LatentAlignment& z, const Alphabet& alphabet);

/// First non-gap token of z0 strictly between latent slots imap[k] and
/// imap[k+1] (or the end of the alignment for the last k), if any.
std::optional<Token> next_nongap(const LatentAlignment& z0, const IndexMap& imap, std::size_t k,
                                 const Alphabet& alphabet);

/// Validates that a token list is a legal observed sequence.
void check_observed(const ObservedSequence& x, const Alphabet& alphabet);

}  // namespace editdiff
