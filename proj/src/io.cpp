#include "editdiff/io.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "editdiff/error.hpp"

namespace editdiff {

using nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        start = end + 1;
    }
    return lines;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t end = s.find(sep, start);
        out.push_back(s.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
        if (end == std::string_view::npos) break;
        start = end + 1;
    }
    return out;
}

long long parse_int(std::string_view key, std::string_view v) {
    long long out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
        throw FormatError("config key '" + std::string(key) + "' expects an integer, got '" + std::string(v) + "'");
    }
    return out;
}

int parse_small_int(std::string_view key, std::string_view v) { return static_cast<int>(parse_int(key, v)); }

double parse_real(std::string_view key, std::string_view v) {
    try {
        return parse_double(v);
    } catch (const FormatError&) {
        throw FormatError("config key '" + std::string(key) + "' expects a number, got '" + std::string(v) + "'");
    }
}

bool parse_bool(std::string_view key, std::string_view v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw FormatError("config key '" + std::string(key) + "' expects true or false, got '" + std::string(v) + "'");
}

StepRange parse_range(std::string_view key, std::string_view v) {
    if (v == "none") return StepRange::never();
    if (v == "all") return {};
    const auto dash = v.find('-');
    if (dash == std::string_view::npos) {
        throw FormatError("config key '" + std::string(key) + "' expects 'first-last', 'all' or 'none'");
    }
    return {parse_small_int(key, v.substr(0, dash)), parse_small_int(key, v.substr(dash + 1))};
}

template <typename Apply>
void apply_each(const KeyValues& kv, std::string_view what, Apply&& apply) {
    for (const auto& [key, value] : kv) {
        if (!apply(key, std::string_view(value))) {
            throw FormatError("unknown " + std::string(what) + " config key '" + key + "'");
        }
    }
}

json parse_json_line(std::string_view line) {
    try {
        return json::parse(line);
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed JSON line: ") + e.what());
    }
}

std::string tokens_to_letters(const std::vector<Token>& tokens, const Alphabet& alphabet) {
    return alphabet.decode(tokens);
}

ObservedSequence letters_to_sequence(const std::string& s, const Alphabet& alphabet) {
    ObservedSequence x{alphabet.encode(s)};
    check_observed(x, alphabet);
    return x;
}

}  // namespace

std::vector<FastaRecord> parse_fasta(std::string_view text, const Alphabet& alphabet) {
    std::vector<FastaRecord> out;
    const auto lines = split_lines(text);
    for (std::size_t n = 0; n < lines.size(); ++n) {
        const std::string_view line = trim(lines[n]);
        const std::string where = " at line " + std::to_string(n + 1);
        if (line.empty()) continue;
        if (line.front() == '>') {
            const std::string_view header = trim(line.substr(1));
            const auto space = header.find_first_of(" \t");
            FastaRecord rec;
            rec.id = std::string(header.substr(0, space));
            if (rec.id.empty()) throw FormatError("malformed FASTA header (empty id)" + where);
            if (space != std::string_view::npos) rec.description = std::string(trim(header.substr(space)));
            out.push_back(std::move(rec));
            continue;
        }
        if (out.empty()) throw FormatError("sequence data before the first FASTA header" + where);
        for (char c : line) {
            if (std::isspace(static_cast<unsigned char>(c))) continue;
            const char u = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
            if (!alphabet.accepts(u) || u == kGapChar) {
                throw FormatError(std::string("illegal residue character '") + c + "'" + where);
            }
            out.back().sequence.tokens.push_back(alphabet.from_char(u));
        }
    }
    return out;
}

std::string write_fasta(const std::vector<FastaRecord>& records, const Alphabet& alphabet) {
    std::string out;
    for (const auto& r : records) {
        if (r.id.empty() || r.id.find_first_of(" \t\n") != std::string::npos) throw FormatError("invalid FASTA id '" + r.id + "'");
        out += '>';
        out += r.id;
        if (!r.description.empty()) {
            out += ' ';
            out += r.description;
        }
        out += '\n';
        const std::string seq = alphabet.decode(r.sequence.tokens);
        for (std::size_t i = 0; i < seq.size(); i += 60) {
            out += seq.substr(i, 60);
            out += '\n';
        }
    }
    return out;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write " + path);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw FormatError("failed writing " + path);
}

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw Error("cannot format number");
    return std::string(buf, ptr);
}

double parse_double(std::string_view text) {
    text = trim(text);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
        throw FormatError("not a number: '" + std::string(text) + "'");
    }
    return v;
}

std::vector<MutationRow> parse_mutation_csv(std::string_view text) {
    const auto lines = split_lines(text);
    std::size_t n = 0;
    while (n < lines.size() && trim(lines[n]).empty()) ++n;
    if (n == lines.size()) throw FormatError("mutation table is empty");
    const auto header = split(trim(lines[n]), ',');
    if (trim(header[0]) != "variant" || header.size() > 2) {
        throw FormatError("mutation table header must be 'variant' or 'variant,<value>'");
    }
    std::vector<MutationRow> rows;
    for (++n; n < lines.size(); ++n) {
        const std::string_view line = trim(lines[n]);
        if (line.empty()) continue;
        const auto cols = split(line, ',');
        if (cols.size() > 2) throw FormatError("too many columns at line " + std::to_string(n + 1));
        MutationRow row;
        row.variant = std::string(trim(cols[0]));
        if (cols.size() == 2 && !trim(cols[1]).empty()) {
            try {
                row.value = parse_double(cols[1]);
            } catch (const FormatError&) {
                throw FormatError("bad value at line " + std::to_string(n + 1));
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string write_mutation_csv(const std::vector<MutationRow>& rows, std::string_view value_column) {
    std::string out = "variant," + std::string(value_column) + "\n";
    for (const auto& r : rows) {
        if (r.variant.find(',') != std::string::npos) throw FormatError("variant contains a comma: " + r.variant);
        out += r.variant;
        out += ',';
        if (r.value) out += format_double(*r.value);
        out += '\n';
    }
    return out;
}

KeyValues parse_key_values(std::string_view text) {
    KeyValues kv;
    const auto lines = split_lines(text);
    for (std::size_t n = 0; n < lines.size(); ++n) {
        const std::string_view line = trim(lines[n]);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw FormatError("expected 'key = value' at line " + std::to_string(n + 1));
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (key.empty()) throw FormatError("empty key at line " + std::to_string(n + 1));
        if (!kv.emplace(key, value).second) throw FormatError("duplicate key '" + key + "' at line " + std::to_string(n + 1));
    }
    return kv;
}

std::string write_key_values(const KeyValues& kv) {
    std::string out;
    for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
    return out;
}

void apply_training_keys(TrainingConfig& c, const KeyValues& kv) {
    apply_each(kv, "training", [&](const std::string& k, std::string_view v) {
        if (k == "residues") c.model.residues = parse_small_int(k, v);
        else if (k == "embed_dim") c.model.embed_dim = parse_small_int(k, v);
        else if (k == "num_layers") c.model.num_layers = parse_small_int(k, v);
        else if (k == "num_heads") c.model.num_heads = parse_small_int(k, v);
        else if (k == "ff_dim") c.model.ff_dim = parse_small_int(k, v);
        else if (k == "max_len") c.model.max_len = parse_small_int(k, v);
        else if (k == "diffusion_steps") c.noise.steps = parse_small_int(k, v);
        else if (k == "schedule") {
            if (v == "linear") c.noise.schedule = ScheduleKind::linear;
            else if (v == "cosine") c.noise.schedule = ScheduleKind::cosine;
            else throw FormatError("schedule must be linear or cosine");
        }
        else if (k == "omega_del") c.noise.kernel.omega_del = parse_real(k, v);
        else if (k == "omega_ins") c.noise.kernel.omega_ins = parse_real(k, v);
        else if (k == "rho_mask") c.noise.kernel.rho_mask = parse_real(k, v);
        else if (k == "blosum_tau") c.noise.blosum_tau = parse_real(k, v);
        else if (k == "kernel") c.main_mode = parse_kernel_mode(v);
        else if (k == "steps") c.steps = parse_small_int(k, v);
        else if (k == "warmup_steps") c.warmup_steps = parse_small_int(k, v);
        else if (k == "batch_size") c.batch_size = parse_small_int(k, v);
        else if (k == "lr") c.lr = parse_real(k, v);
        else if (k == "lr_floor") c.lr_floor = parse_real(k, v);
        else if (k == "lr_warmup") c.lr_warmup = parse_small_int(k, v);
        else if (k == "gamma_sub") c.weights.gamma_sub = parse_real(k, v);
        else if (k == "gamma_del") c.weights.gamma_del = parse_real(k, v);
        else if (k == "gamma_ins") c.weights.gamma_ins = parse_real(k, v);
        else if (k == "lambda") c.lambda_mode = parse_lambda_mode(v);
        else return false;
        return true;
    });
}

KeyValues training_keys(const TrainingConfig& c) {
    return {{"residues", std::to_string(c.model.residues)},
            {"embed_dim", std::to_string(c.model.embed_dim)},
            {"num_layers", std::to_string(c.model.num_layers)},
            {"num_heads", std::to_string(c.model.num_heads)},
            {"ff_dim", std::to_string(c.model.ff_dim)},
            {"max_len", std::to_string(c.model.max_len)},
            {"diffusion_steps", std::to_string(c.noise.steps)},
            {"schedule", c.noise.schedule == ScheduleKind::linear ? "linear" : "cosine"},
            {"omega_del", format_double(c.noise.kernel.omega_del)},
            {"omega_ins", format_double(c.noise.kernel.omega_ins)},
            {"rho_mask", format_double(c.noise.kernel.rho_mask)},
            {"blosum_tau", format_double(c.noise.blosum_tau)},
            {"kernel", std::string(kernel_mode_name(c.main_mode))},
            {"steps", std::to_string(c.steps)},
            {"warmup_steps", std::to_string(c.warmup_steps)},
            {"batch_size", std::to_string(c.batch_size)},
            {"lr", format_double(c.lr)},
            {"lr_floor", format_double(c.lr_floor)},
            {"lr_warmup", std::to_string(c.lr_warmup)},
            {"gamma_sub", format_double(c.weights.gamma_sub)},
            {"gamma_del", format_double(c.weights.gamma_del)},
            {"gamma_ins", format_double(c.weights.gamma_ins)},
            {"lambda", std::string(lambda_mode_name(c.lambda_mode))}};
}

void apply_sampler_keys(SamplerConfig& c, const KeyValues& kv) {
    apply_each(kv, "generate", [&](const std::string& k, std::string_view v) {
        if (k == "sample_steps") c.steps = parse_small_int(k, v);
        else if (k == "tau_del") c.tau_del = parse_real(k, v);
        else if (k == "tau_ins") c.tau_ins = parse_real(k, v);
        else if (k == "renoise") c.renoise = parse_kernel_mode(v);
        else if (k == "blosum_tau") c.blosum_tau = parse_real(k, v);
        else if (k == "delete_steps") c.delete_steps = parse_range(k, v);
        else if (k == "insert_steps") c.insert_steps = parse_range(k, v);
        else return false;
        return true;
    });
}

void apply_evolve_keys(EvolveConfig& c, const KeyValues& kv) {
    apply_each(kv, "evolve", [&](const std::string& k, std::string_view v) {
        if (k == "iterations") c.iterations = parse_small_int(k, v);
        else if (k == "width") c.width = static_cast<std::size_t>(parse_int(k, v));
        else if (k == "beam") c.beam = static_cast<std::size_t>(parse_int(k, v));
        else if (k == "retain_parents") c.retain_parents = parse_bool(k, v);
        else if (k == "allow_indels") c.allow_indels = parse_bool(k, v);
        else if (k == "proposer") c.proposer = parse_proposer(v);
        else if (k == "tau_del") c.tau_del = parse_real(k, v);
        else if (k == "tau_ins") c.tau_ins = parse_real(k, v);
        else return false;
        return true;
    });
}

std::string metrics_json_line(const StepMetrics& m) {
    json j = {{"step", m.step},
              {"L_sub", m.loss.sub},
              {"L_del", m.loss.del},
              {"L_ins", m.loss.ins},
              {"total", m.loss.total},
              {"lr", m.lr},
              {"kernel_mode", std::string(kernel_mode_name(m.mode))},
              {"skipped", m.skipped}};
    return j.dump();
}

StepMetrics parse_metrics_json_line(std::string_view line) {
    const json j = parse_json_line(line);
    try {
        StepMetrics m;
        m.step = j.at("step").get<int>();
        m.loss.sub = j.at("L_sub").get<double>();
        m.loss.del = j.at("L_del").get<double>();
        m.loss.ins = j.at("L_ins").get<double>();
        m.loss.total = j.at("total").get<double>();
        m.lr = j.at("lr").get<double>();
        m.mode = parse_kernel_mode(j.at("kernel_mode").get<std::string>());
        m.skipped = j.value("skipped", std::size_t{0});
        return m;
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad metrics record: ") + e.what());
    }
}

std::string history_json_line(const IterationStats& s) {
    json j = {{"iteration", s.iteration},     {"best_score", s.best_score}, {"mean_score", s.mean_score},
              {"pool_size", s.pool_size},     {"n_filtered", s.n_filtered}, {"kept_parents", s.kept_parents}};
    return j.dump();
}

IterationStats parse_history_json_line(std::string_view line) {
    const json j = parse_json_line(line);
    try {
        IterationStats s;
        s.iteration = j.at("iteration").get<int>();
        s.best_score = j.at("best_score").get<double>();
        s.mean_score = j.at("mean_score").get<double>();
        s.pool_size = j.at("pool_size").get<std::size_t>();
        s.n_filtered = j.at("n_filtered").get<std::size_t>();
        s.kept_parents = j.value("kept_parents", false);
        return s;
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad history record: ") + e.what());
    }
}

std::string trajectory_jsonl(const Trajectory& trajectory, std::size_t id, const Alphabet& alphabet) {
    if (trajectory.mask != alphabet.mask()) throw Error("trajectory alphabet mismatch");
    std::string out = json{{"id", id}, {"init", true}, {"seq", tokens_to_letters(trajectory.initial.tokens, alphabet)}}.dump();
    out += '\n';
    for (const auto& r : trajectory.steps) {
        json subs = json::array();
        for (const auto& s : r.subs) {
            subs.push_back({s.pos, std::string(1, alphabet.to_char(s.before)), std::string(1, alphabet.to_char(s.after))});
        }
        json j = {{"id", id},
                  {"t", r.t},
                  {"seq", tokens_to_letters(r.seq.tokens, alphabet)},
                  {"dels", r.dels},
                  {"ins", r.ins},
                  {"subs", subs},
                  {"renoised", r.renoised},
                  {"renoise_new", tokens_to_letters(r.renoise_tokens, alphabet)},
                  {"p_del", r.mean_p_del},
                  {"p_ins", r.mean_p_ins},
                  {"aborted", r.aborted}};
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::vector<Trajectory> parse_trajectory_jsonl(std::string_view text, const Alphabet& alphabet) {
    std::vector<Trajectory> out;
    std::map<std::size_t, std::size_t> index;
    const auto lines = split_lines(text);
    for (std::size_t n = 0; n < lines.size(); ++n) {
        if (trim(lines[n]).empty()) continue;
        const json j = parse_json_line(lines[n]);
        try {
            const auto id = j.at("id").get<std::size_t>();
            auto it = index.find(id);
            if (j.value("init", false)) {
                if (it != index.end()) throw FormatError("duplicate init record for id " + std::to_string(id));
                index[id] = out.size();
                Trajectory t;
                t.mask = alphabet.mask();
                t.initial = letters_to_sequence(j.at("seq").get<std::string>(), alphabet);
                out.push_back(std::move(t));
                continue;
            }
            if (it == index.end()) throw FormatError("step record before init for id " + std::to_string(id));
            StepRecord r;
            r.t = j.at("t").get<int>();
            r.seq = letters_to_sequence(j.at("seq").get<std::string>(), alphabet);
            r.dels = j.at("dels").get<std::vector<std::size_t>>();
            r.ins = j.at("ins").get<std::vector<std::size_t>>();
            for (const auto& s : j.at("subs")) {
                r.subs.push_back({s.at(0).get<std::size_t>(), alphabet.from_char(s.at(1).get<std::string>().at(0)),
                                  alphabet.from_char(s.at(2).get<std::string>().at(0))});
            }
            r.renoised = j.at("renoised").get<std::vector<std::size_t>>();
            r.renoise_tokens = alphabet.encode(j.at("renoise_new").get<std::string>());
            r.mean_p_del = j.at("p_del").get<double>();
            r.mean_p_ins = j.at("p_ins").get<double>();
            r.aborted = j.at("aborted").get<bool>();
            out[it->second].steps.push_back(std::move(r));
        } catch (const json::exception& e) {
            throw FormatError("bad trajectory record at line " + std::to_string(n + 1) + ": " + e.what());
        } catch (const std::out_of_range&) {
            throw FormatError("bad trajectory record at line " + std::to_string(n + 1));
        }
    }
    return out;
}

std::string matrix_csv(const Eigen::MatrixXd& m, const std::vector<std::string>& labels) {
    if (m.rows() != m.cols() || static_cast<std::size_t>(m.rows()) != labels.size()) {
        throw Error("matrix and labels disagree in size");
    }
    std::string out = "to\\from";
    for (const auto& l : labels) out += "," + l;
    out += '\n';
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        out += labels[static_cast<std::size_t>(r)];
        for (Eigen::Index c = 0; c < m.cols(); ++c) out += "," + format_double(m(r, c));
        out += '\n';
    }
    return out;
}

Eigen::MatrixXd parse_matrix_csv(std::string_view text, std::vector<std::string>* labels) {
    std::vector<std::string_view> lines;
    for (auto l : split_lines(text)) {
        if (!trim(l).empty()) lines.push_back(l);
    }
    if (lines.empty()) throw FormatError("matrix CSV is empty");
    const auto header = split(lines[0], ',');
    const auto n = static_cast<Eigen::Index>(header.size() - 1);
    if (static_cast<Eigen::Index>(lines.size()) != n + 1) throw FormatError("matrix CSV is not square");
    Eigen::MatrixXd m(n, n);
    if (labels) {
        labels->clear();
        for (std::size_t i = 1; i < header.size(); ++i) labels->emplace_back(header[i]);
    }
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto cols = split(lines[static_cast<std::size_t>(r + 1)], ',');
        if (static_cast<Eigen::Index>(cols.size()) != n + 1) throw FormatError("matrix CSV row has the wrong width");
        if (cols[0] != header[static_cast<std::size_t>(r + 1)]) throw FormatError("matrix CSV row label mismatch");
        for (Eigen::Index c = 0; c < n; ++c) m(r, c) = parse_double(cols[static_cast<std::size_t>(c + 1)]);
    }
    return m;
}

std::string profile_json(const ProfileModel& p, const Alphabet& alphabet) {
    if (alphabet.size() != p.residues) throw Error("alphabet does not match the profile");
    json j = {{"alphabet", alphabet.letters()}, {"length", p.length()},   {"emissions", p.emissions},
              {"p_del", p.p_del},               {"p_ins", p.p_ins},       {"background", p.background},
              {"core", p.core}};
    return j.dump(1);
}

ProfileModel parse_profile_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
        ProfileModel p;
        p.residues = static_cast<int>(j.at("alphabet").get<std::string>().size());
        p.emissions = j.at("emissions").get<std::vector<std::vector<double>>>();
        p.p_del = j.at("p_del").get<std::vector<double>>();
        p.p_ins = j.at("p_ins").get<std::vector<double>>();
        p.background = j.at("background").get<std::vector<double>>();
        p.core = j.at("core").get<std::vector<std::size_t>>();
        if (j.at("length").get<std::size_t>() != p.length()) throw FormatError("profile length field disagrees with its rows");
        p.validate();
        return p;
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad profile JSON: ") + e.what());
    } catch (const FormatError&) {
        throw;
    } catch (const Error& e) {
        throw FormatError(std::string("invalid profile: ") + e.what());
    }
}

}  // namespace editdiff
