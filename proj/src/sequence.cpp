#include "editdiff/sequence.hpp"

#include <string>

#include "editdiff/error.hpp"

namespace editdiff {

ObservedSequence collapse(const LatentAlignment& z, const Alphabet& alphabet) {
    ObservedSequence x;
    x.tokens.reserve(z.size());
    for (Token t : z.tokens) {
        if (t != alphabet.gap()) x.tokens.push_back(t);
    }
    if (x.empty()) {
        throw EmptySequenceError("latent alignment collapses to an empty sequence");
    }
    return x;
}

std::size_t collapsed_length(const LatentAlignment& z, const Alphabet& alphabet) {
    std::size_t n = 0;
    for (Token t : z.tokens) n += (t != alphabet.gap());
    return n;
}

LatentAlignment canonical_expand(const ObservedSequence& x, const Alphabet& alphabet) {
    LatentAlignment z;
    z.tokens.reserve(2 * x.size());
    for (Token t : x.tokens) {
        z.tokens.push_back(t);
        z.tokens.push_back(alphabet.gap());
    }
    return z;
}

LatentAlignment random_alignment(const ObservedSequence& x, const Alphabet& alphabet, Rng& rng) {
    // Sequential selection sampling: each of the C(2L, L) gap-position subsets
    // is equally likely.
    const std::size_t n = 2 * x.size();
    std::size_t gaps_left = x.size();
    std::size_t next = 0;
    LatentAlignment z;
    z.tokens.reserve(n);
    for (std::size_t slot = 0; slot < n; ++slot) {
        const std::size_t remaining = n - slot;
        if (gaps_left > 0 && rng.uniform() * static_cast<double>(remaining) < static_cast<double>(gaps_left)) {
            z.tokens.push_back(alphabet.gap());
            --gaps_left;
        } else {
            z.tokens.push_back(x.tokens[next++]);
        }
    }
    return z;
}

IndexMap index_map(const LatentAlignment& z, const Alphabet& alphabet) {
    IndexMap map;
    for (std::size_t j = 0; j < z.size(); ++j) {
        if (z.tokens[j] != alphabet.gap()) map.push_back(j);
    }
    return map;
}

std::optional<Token> next_nongap(const LatentAlignment& z0, const IndexMap& imap, std::size_t k,
                                 const Alphabet& alphabet) {
    if (k >= imap.size()) {
        throw Error("observed index " + std::to_string(k) + " out of range for index map of size " +
                    std::to_string(imap.size()));
    }
    const std::size_t end = (k + 1 < imap.size()) ? imap[k + 1] : z0.size();
    for (std::size_t j = imap[k] + 1; j < end; ++j) {
        if (z0.tokens[j] != alphabet.gap()) return z0.tokens[j];
    }
    return std::nullopt;
}

void check_observed(const ObservedSequence& x, const Alphabet& alphabet) {
    if (x.empty()) throw EmptySequenceError("empty sequence");
    for (Token t : x.tokens) {
        if (!alphabet.is_residue(t) && t != alphabet.mask()) {
            throw FormatError("observed sequence contains a non-residue token");
        }
    }
}

}  // namespace editdiff
