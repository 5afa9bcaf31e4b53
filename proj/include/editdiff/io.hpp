#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "editdiff/evolution.hpp"
#include "editdiff/kernels.hpp"
#include "editdiff/profile.hpp"
#include "editdiff/sampler.hpp"
#include "editdiff/training.hpp"

namespace editdiff {

struct FastaRecord {
    std::string id;
    std::string description;
    ObservedSequence sequence;

    bool operator==(const FastaRecord&) const = default;
};

/// Headers are ">id description"; sequence lines may be wrapped and are
/// upper-cased. Errors carry the 1-based line number.
std::vector<FastaRecord> parse_fasta(std::string_view text, const Alphabet& alphabet);
/// Normalized form: ">id[ description]" and 60-column sequence lines.
std::string write_fasta(const std::vector<FastaRecord>& records, const Alphabet& alphabet);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view text);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view text);

/// Mutation table row: `variant[,value]`.
struct MutationRow {
    std::string variant;
    std::optional<double> value;

    bool operator==(const MutationRow&) const = default;
};

/// First line is a header whose first column is `variant`.
std::vector<MutationRow> parse_mutation_csv(std::string_view text);
std::string write_mutation_csv(const std::vector<MutationRow>& rows, std::string_view value_column = "score");

/// Flat `key = value` configuration; '#' starts a comment line.
using KeyValues = std::map<std::string, std::string>;
KeyValues parse_key_values(std::string_view text);
std::string write_key_values(const KeyValues& kv);

/// Applies recognised keys; throws FormatError on unknown keys or bad values.
void apply_training_keys(TrainingConfig& config, const KeyValues& kv);
void apply_sampler_keys(SamplerConfig& config, const KeyValues& kv);
void apply_evolve_keys(EvolveConfig& config, const KeyValues& kv);
KeyValues training_keys(const TrainingConfig& config);

std::string metrics_json_line(const StepMetrics& m);
StepMetrics parse_metrics_json_line(std::string_view line);

std::string history_json_line(const IterationStats& s);
IterationStats parse_history_json_line(std::string_view line);

/// One "init" record holding x_T, then one record per step, all tagged with
/// the generation `id`.
std::string trajectory_jsonl(const Trajectory& trajectory, std::size_t id, const Alphabet& alphabet);
/// Groups records by id, in order of first appearance.
std::vector<Trajectory> parse_trajectory_jsonl(std::string_view text, const Alphabet& alphabet);

/// Labeled square matrix: header "to\from,<labels>", one labeled row per target.
std::string matrix_csv(const Eigen::MatrixXd& m, const std::vector<std::string>& labels);
Eigen::MatrixXd parse_matrix_csv(std::string_view text, std::vector<std::string>* labels = nullptr);

std::string profile_json(const ProfileModel& profile, const Alphabet& alphabet);
ProfileModel parse_profile_json(std::string_view text);

}  // namespace editdiff
