#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "editdiff/alphabet.hpp"
#include "editdiff/sequence.hpp"

namespace editdiff {

enum class EditKind { substitute, remove, insert };

/// One edit in wild-type coordinates (1-based, like "A42G").
///
/// substitute/remove refer to wild-type residue `pos`. insert places
/// `new_token` immediately after wild-type residue `pos`; pos 0 means before
/// the first residue.
struct EditOp {
    EditKind kind = EditKind::substitute;
    std::size_t pos = 0;
    Token wt_token = -1;
    Token new_token = -1;

    static EditOp substitute(std::size_t pos, Token wt, Token mut) { return {EditKind::substitute, pos, wt, mut}; }
    static EditOp remove(std::size_t pos, Token wt) { return {EditKind::remove, pos, wt, -1}; }
    static EditOp insert(std::size_t pos, Token token) { return {EditKind::insert, pos, -1, token}; }

    bool operator==(const EditOp&) const = default;
};

using EditScript = std::vector<EditOp>;

/// Minimum edit distance (unit costs).
std::size_t edit_distance(const ObservedSequence& a, const ObservedSequence& b);

/// Minimum-cost script turning wt into mut, ordered by wild-type position.
/// On equal cost the traceback prefers substitute, then delete, then insert.
EditScript levenshtein_edit_script(const ObservedSequence& wt, const ObservedSequence& mut);

/// Applies a script given in wild-type coordinates. Throws FormatError when a
/// recorded wild-type residue disagrees with `wt` or positions are invalid.
ObservedSequence apply_edit_script(const ObservedSequence& wt, const EditScript& script);

/// Textual form: "sub7K>R", "del42", "insA101", joined with ';'.
std::string format_edit_script(const EditScript& script, const Alphabet& alphabet);
EditScript parse_edit_script(const std::string& text, const Alphabet& alphabet);

}  // namespace editdiff
