#include "editdiff/edit_script.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "editdiff/error.hpp"

namespace editdiff {
namespace {

using Table = std::vector<std::vector<std::size_t>>;

Table distance_table(const ObservedSequence& a, const ObservedSequence& b) {
    Table d(a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
    for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
    for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t diag = d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            d[i][j] = std::min({diag, d[i - 1][j] + 1, d[i][j - 1] + 1});
        }
    }
    return d;
}

std::size_t parse_position(std::string_view digits, const std::string& item) {
    std::size_t value = 0;
    const auto* end = digits.data() + digits.size();
    auto [ptr, ec] = std::from_chars(digits.data(), end, value);
    if (digits.empty() || ec != std::errc() || ptr != end) {
        throw FormatError("bad position in edit '" + item + "'");
    }
    return value;
}

}  // namespace

std::size_t edit_distance(const ObservedSequence& a, const ObservedSequence& b) {
    return distance_table(a, b)[a.size()][b.size()];
}

EditScript levenshtein_edit_script(const ObservedSequence& wt, const ObservedSequence& mut) {
    const Table d = distance_table(wt, mut);
    EditScript reversed;
    std::size_t i = wt.size();
    std::size_t j = mut.size();
    while (i > 0 || j > 0) {
        if (i > 0 && j > 0 && wt[i - 1] == mut[j - 1] && d[i][j] == d[i - 1][j - 1]) {
            --i;
            --j;
        } else if (i > 0 && j > 0 && d[i][j] == d[i - 1][j - 1] + 1) {
            reversed.push_back(EditOp::substitute(i, wt[i - 1], mut[j - 1]));
            --i;
            --j;
        } else if (i > 0 && d[i][j] == d[i - 1][j] + 1) {
            reversed.push_back(EditOp::remove(i, wt[i - 1]));
            --i;
        } else {
            reversed.push_back(EditOp::insert(i, mut[j - 1]));
            --j;
        }
    }
    return {reversed.rbegin(), reversed.rend()};
}

ObservedSequence apply_edit_script(const ObservedSequence& wt, const EditScript& script) {
    const std::size_t n = wt.size();
    std::vector<int> site_op(n + 1, -1);
    std::vector<std::vector<Token>> inserts(n + 1);
    for (std::size_t k = 0; k < script.size(); ++k) {
        const EditOp& op = script[k];
        if (op.kind == EditKind::insert) {
            if (op.pos > n) throw FormatError("insertion position beyond the wild type");
            inserts[op.pos].push_back(op.new_token);
            continue;
        }
        if (op.pos < 1 || op.pos > n) {
            throw FormatError("edit position " + std::to_string(op.pos) + " outside the wild type");
        }
        if (site_op[op.pos] != -1) {
            throw FormatError("two edits at wild-type position " + std::to_string(op.pos));
        }
        if (op.wt_token >= 0 && op.wt_token != wt[op.pos - 1]) {
            throw FormatError("wild-type residue mismatch at position " + std::to_string(op.pos));
        }
        site_op[op.pos] = static_cast<int>(k);
    }

    ObservedSequence out;
    out.tokens.reserve(n + script.size());
    for (Token t : inserts[0]) out.tokens.push_back(t);
    for (std::size_t p = 1; p <= n; ++p) {
        if (site_op[p] < 0) {
            out.tokens.push_back(wt[p - 1]);
        } else if (const EditOp& op = script[static_cast<std::size_t>(site_op[p])]; op.kind == EditKind::substitute) {
            out.tokens.push_back(op.new_token);
        }
        for (Token t : inserts[p]) out.tokens.push_back(t);
    }
    return out;
}

std::string format_edit_script(const EditScript& script, const Alphabet& alphabet) {
    std::ostringstream out;
    for (std::size_t k = 0; k < script.size(); ++k) {
        if (k) out << ';';
        const EditOp& op = script[k];
        switch (op.kind) {
            case EditKind::substitute:
                out << "sub" << op.pos << alphabet.to_char(op.wt_token) << '>' << alphabet.to_char(op.new_token);
                break;
            case EditKind::remove:
                out << "del" << op.pos;
                break;
            case EditKind::insert:
                out << "ins" << alphabet.to_char(op.new_token) << op.pos;
                break;
        }
    }
    return out.str();
}

EditScript parse_edit_script(const std::string& text, const Alphabet& alphabet) {
    EditScript script;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ';')) {
        if (item.empty()) continue;
        const std::string_view view(item);
        if (view.starts_with("sub")) {
            // sub<pos><wt>><mut>
            const auto gt = view.find('>');
            if (gt == std::string_view::npos || gt < 5 || gt + 2 != view.size()) {
                throw FormatError("bad substitution '" + item + "'");
            }
            const std::size_t pos = parse_position(view.substr(3, gt - 4), item);
            script.push_back(EditOp::substitute(pos, alphabet.from_char(view[gt - 1]), alphabet.from_char(view[gt + 1])));
        } else if (view.starts_with("del")) {
            script.push_back(EditOp::remove(parse_position(view.substr(3), item), -1));
        } else if (view.starts_with("ins")) {
            if (view.size() < 5) throw FormatError("bad insertion '" + item + "'");
            script.push_back(EditOp::insert(parse_position(view.substr(4), item), alphabet.from_char(view[3])));
        } else {
            throw FormatError("unknown edit '" + item + "'");
        }
    }
    return script;
}

}  // namespace editdiff
