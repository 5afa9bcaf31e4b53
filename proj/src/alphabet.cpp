#include "editdiff/alphabet.hpp"

#include <cctype>

#include "editdiff/error.hpp"

namespace editdiff {

Alphabet::Alphabet() : Alphabet(std::string(kCanonicalAminoAcids)) {}

Alphabet::Alphabet(std::string letters) : letters_(std::move(letters)) {
    if (letters_.size() < 2) {
        throw Error("alphabet needs at least two residues");
    }
    lookup_.fill(-1);
    for (std::size_t i = 0; i < letters_.size(); ++i) {
        const auto c = static_cast<unsigned char>(letters_[i]);
        if (c == kMaskChar || c == kGapChar || !std::isupper(c) || lookup_[c] != -1) {
            throw Error(std::string("invalid or duplicate alphabet letter '") + letters_[i] + "'");
        }
        lookup_[c] = static_cast<std::int16_t>(i);
    }
    lookup_[static_cast<unsigned char>(kMaskChar)] = static_cast<std::int16_t>(mask());
    lookup_[static_cast<unsigned char>(kGapChar)] = static_cast<std::int16_t>(gap());
}

Alphabet Alphabet::with_size(int k) {
    if (k < 2 || k > static_cast<int>(kCanonicalAminoAcids.size())) {
        throw Error("alphabet size must be in [2, 20]");
    }
    return Alphabet(std::string(kCanonicalAminoAcids.substr(0, static_cast<std::size_t>(k))));
}

char Alphabet::to_char(Token t) const {
    if (is_residue(t)) return letters_[static_cast<std::size_t>(t)];
    if (t == mask()) return kMaskChar;
    if (t == gap()) return kGapChar;
    throw Error("token id " + std::to_string(t) + " outside the alphabet");
}

bool Alphabet::accepts(char c) const noexcept {
    return lookup_[static_cast<unsigned char>(c)] >= 0;
}

Token Alphabet::from_char(char c) const {
    const auto id = lookup_[static_cast<unsigned char>(c)];
    if (id < 0) {
        throw FormatError(std::string("illegal residue character '") + c + "'");
    }
    return id;
}

std::string Alphabet::decode(const std::vector<Token>& tokens) const {
    std::string out;
    out.reserve(tokens.size());
    for (Token t : tokens) out.push_back(to_char(t));
    return out;
}

std::vector<Token> Alphabet::encode(std::string_view text) const {
    std::vector<Token> out;
    out.reserve(text.size());
    for (char c : text) out.push_back(from_char(c));
    return out;
}

}  // namespace editdiff
