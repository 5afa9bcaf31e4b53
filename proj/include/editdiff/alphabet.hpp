#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace editdiff {

using Token = std::int32_t;

inline constexpr std::string_view kCanonicalAminoAcids = "ACDEFGHIKLMNPQRSTVWY";
inline constexpr char kMaskChar = 'X';
inline constexpr char kGapChar = '-';

/// Residue vocabulary plus the two special tokens.
///
/// Amino acids occupy ids 0..K-1 in the order given at construction, the mask
/// token is K and the gap token is K+1. Text uses 'X' for mask and '-' for gap.
class Alphabet {
public:
    /// The standard 20-letter protein alphabet.
    Alphabet();
    explicit Alphabet(std::string letters);

    /// First `k` letters of the canonical order (2 <= k <= 20); used for small
    /// brute-force tests.
    static Alphabet with_size(int k);

    int size() const noexcept { return static_cast<int>(letters_.size()); }
    Token mask() const noexcept { return size(); }
    Token gap() const noexcept { return size() + 1; }
    int extended_size() const noexcept { return size() + 2; }

    bool is_residue(Token t) const noexcept { return t >= 0 && t < size(); }
    const std::string& letters() const noexcept { return letters_; }

    char to_char(Token t) const;
    /// Throws FormatError for letters outside the alphabet.
    Token from_char(char c) const;
    bool accepts(char c) const noexcept;

    std::string decode(const std::vector<Token>& tokens) const;
    std::vector<Token> encode(std::string_view text) const;

    bool operator==(const Alphabet& other) const { return letters_ == other.letters_; }

private:
    std::string letters_;
    std::array<std::int16_t, 256> lookup_{};
};

}  // namespace editdiff
