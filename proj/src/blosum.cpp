#include "editdiff/blosum.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <vector>

#include "editdiff/error.hpp"

namespace editdiff {
namespace {

// Henikoff & Henikoff BLOSUM62, in the customary ARNDCQEGHILKMFPSTWYV order.
constexpr char kBlosumText[] = R"(   A  R  N  D  C  Q  E  G  H  I  L  K  M  F  P  S  T  W  Y  V
A  4 -1 -2 -2  0 -1 -1  0 -2 -1 -1 -1 -1 -2 -1  1  0 -3 -2  0
R -1  5  0 -2 -3  1  0 -2  0 -3 -2  2 -1 -3 -2 -1 -1 -3 -2 -3
N -2  0  6  1 -3  0  0  0  1 -3 -3  0 -2 -3 -2  1  0 -4 -2 -3
D -2 -2  1  6 -3  0  2 -1 -1 -3 -4 -1 -3 -3 -1  0 -1 -4 -3 -3
C  0 -3 -3 -3  9 -3 -4 -3 -3 -1 -1 -3 -1 -2 -3 -1 -1 -2 -2 -1
Q -1  1  0  0 -3  5  2 -2  0 -3 -2  1  0 -3 -1  0 -1 -2 -1 -2
E -1  0  0  2 -4  2  5 -2  0 -3 -3  1 -2 -3 -1  0 -1 -3 -2 -2
G  0 -2  0 -1 -3 -2 -2  6 -2 -4 -4 -2 -3 -3 -2  0 -2 -2 -3 -3
H -2  0  1 -1 -3  0  0 -2  8 -3 -3 -1 -2 -1 -2 -1 -2 -2  2 -3
I -1 -3 -3 -3 -1 -3 -3 -4 -3  4  2 -3  1  0 -3 -2 -1 -3 -1  3
L -1 -2 -3 -4 -1 -2 -3 -4 -3  2  4 -2  2  0 -3 -2 -1 -2 -1  1
K -1  2  0 -1 -3  1  1 -2 -1 -3 -2  5 -1 -3 -1  0 -1 -3 -2 -2
M -1 -1 -2 -3 -1  0 -2 -3 -2  1  2 -1  5  0 -2 -1 -1 -1 -1  1
F -2 -3 -3 -3 -2 -3 -3 -3 -1  0  0 -3  0  6 -4 -2 -2  1  3 -1
P -1 -2 -2 -1 -3 -1 -1 -2 -2 -3 -3 -1 -2 -4  7 -1 -1 -4 -3 -2
S  1 -1  1  0 -1  0  0  0 -1 -2 -2  0 -1 -2 -1  4  1 -3 -2 -2
T  0 -1  0 -1 -1 -1 -1 -2 -2 -1 -1 -1 -1 -2 -1  1  5 -2 -2  0
W -3 -3 -4 -4 -2 -2 -3 -2 -2 -3 -2 -3 -1  1 -4 -3 -2 11  2 -3
Y -2 -2 -2 -3 -2 -1 -2 -3  2 -1 -1 -2 -1  3 -3 -2 -2  2  7 -1
V  0 -3 -3 -3 -1 -2 -2 -3 -3  3  1 -2  1 -1 -2 -2  0 -3 -1  4
)";

}  // namespace

Eigen::MatrixXd blosum62() {
    static const Eigen::MatrixXd table = [] {
        std::istringstream in(kBlosumText);
        return read_score_matrix(in, Alphabet());
    }();
    return table;
}

Eigen::MatrixXd read_score_matrix(std::istream& in, const Alphabet& alphabet) {
    std::string line;
    std::vector<char> header;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream fields(line);
        std::string tok;
        if (!(fields >> tok) || tok[0] == '#') continue;
        do {
            if (tok.size() != 1) throw FormatError("score matrix header: bad column label '" + tok + "'");
            header.push_back(tok[0]);
        } while (fields >> tok);
        break;
    }
    if (header.empty()) throw FormatError("score matrix: missing header row");

    const int k = alphabet.size();
    Eigen::MatrixXd scores(k, k);
    std::vector<bool> seen(static_cast<std::size_t>(k), false);
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream fields(line);
        std::string label;
        if (!(fields >> label) || label[0] == '#') continue;
        if (label.size() != 1) {
            throw FormatError("score matrix line " + std::to_string(line_no) + ": bad row label");
        }
        std::vector<double> values;
        double v = 0.0;
        while (fields >> v) values.push_back(v);
        if (!fields.eof() || values.size() != header.size()) {
            throw FormatError("score matrix line " + std::to_string(line_no) + ": expected " +
                              std::to_string(header.size()) + " numeric columns");
        }
        if (!alphabet.accepts(label[0]) || !alphabet.is_residue(alphabet.from_char(label[0]))) continue;
        const Token row = alphabet.from_char(label[0]);
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (!alphabet.accepts(header[c])) continue;
            const Token col = alphabet.from_char(header[c]);
            if (alphabet.is_residue(col)) scores(row, col) = values[c];
        }
        seen[static_cast<std::size_t>(row)] = true;
    }
    for (int a = 0; a < k; ++a) {
        const char letter = alphabet.to_char(a);
        const bool in_header = std::find(header.begin(), header.end(), letter) != header.end();
        if (!seen[static_cast<std::size_t>(a)] || !in_header) {
            throw FormatError(std::string("score matrix: residue '") + letter + "' missing");
        }
    }
    return scores;
}

Eigen::MatrixXd load_score_matrix(const std::string& path, const Alphabet& alphabet) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open score matrix file: " + path);
    return read_score_matrix(in, alphabet);
}

}  // namespace editdiff
