#include <doctest.h>

#include <algorithm>
#include <random>

#include "editdiff/alphabet.hpp"
#include "editdiff/edit_script.hpp"
#include "editdiff/error.hpp"

using namespace editdiff;

namespace {

// Plain Wagner-Fischer table.
std::size_t reference_distance(const std::vector<Token>& a, const std::vector<Token>& b) {
    std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
    for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
    for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i)
        for (std::size_t j = 1; j <= b.size(); ++j)
            d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] != b[j - 1])});
    return d[a.size()][b.size()];
}

}  // namespace

TEST_CASE("levenshtein scripts are minimal and reproduce the mutant") {
    std::mt19937_64 gen(5);
    std::uniform_int_distribution<int> len(0, 9);
    std::uniform_int_distribution<Token> tok(0, 3);
    for (int trial = 0; trial < 500; ++trial) {
        ObservedSequence a, b;
        for (int i = len(gen); i > 0; --i) a.tokens.push_back(tok(gen));
        for (int i = len(gen); i > 0; --i) b.tokens.push_back(tok(gen));
        const auto script = levenshtein_edit_script(a, b);
        CHECK(script.size() == reference_distance(a.tokens, b.tokens));
        CHECK(edit_distance(a, b) == script.size());
        CHECK(apply_edit_script(a, script) == b);
    }
}

TEST_CASE("single edits") {
    ObservedSequence wt{{0, 1, 2}};
    auto s = levenshtein_edit_script(wt, ObservedSequence{{0, 3, 2}});
    REQUIRE(s.size() == 1);
    CHECK(s[0] == EditOp::substitute(2, 1, 3));

    s = levenshtein_edit_script(wt, ObservedSequence{{0, 2}});
    REQUIRE(s.size() == 1);
    CHECK(s[0].kind == EditKind::remove);

    s = levenshtein_edit_script(wt, ObservedSequence{{3, 0, 1, 2}});
    REQUIRE(s.size() == 1);
    CHECK(s[0] == EditOp::insert(0, 3));

    CHECK(levenshtein_edit_script(wt, wt).empty());
}

TEST_CASE("apply_edit_script checks recorded wild-type residues") {
    ObservedSequence wt{{0, 1, 2}};
    CHECK_THROWS_AS(apply_edit_script(wt, {EditOp::substitute(2, 0, 3)}), FormatError);
    CHECK_THROWS_AS(apply_edit_script(wt, {EditOp::remove(4, 0)}), FormatError);
    CHECK_THROWS_AS(apply_edit_script(wt, {EditOp::insert(4, 0)}), FormatError);
}

TEST_CASE("edit script text round trip") {
    Alphabet a;
    EditScript s{EditOp::substitute(7, a.from_char('K'), a.from_char('R')), EditOp::remove(42, a.from_char('A')),
                 EditOp::insert(101, a.from_char('A'))};
    const auto text = format_edit_script(s, a);
    CHECK(text == "sub7K>R;del42;insA101");
    auto back = parse_edit_script(text, a);
    REQUIRE(back.size() == 3);
    CHECK(back[0] == s[0]);
    CHECK(back[1].kind == EditKind::remove);
    CHECK(back[1].pos == 42);
    CHECK(back[2] == s[2]);
    CHECK_THROWS_AS(parse_edit_script("mut7", a), FormatError);
    CHECK_THROWS_AS(parse_edit_script("sub7K>B", a), FormatError);
}
