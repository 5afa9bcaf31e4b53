#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "editdiff/denoiser.hpp"

namespace editdiff {

inline constexpr char kCheckpointMagic[4] = {'D', 'P', 'E', 'V'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Serialized layout (all integers little-endian):
///   "DPEV" | u32 version
///   u32 n_fields, then per field: u32 name_len | name | u32 value
///   u32 n_tensors, then per tensor: u32 name_len | name | u32 rank |
///       u32 dims[rank] | float32 values[prod(dims)] (row-major)
std::vector<std::uint8_t> serialize_checkpoint(const DenoiserParams& params);
DenoiserParams deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const DenoiserParams& params, const std::string& path);
/// Throws FormatError on bad magic/version, truncation or shape mismatch;
/// nothing is returned unless the whole file parses.
DenoiserParams load_checkpoint(const std::string& path);

}  // namespace editdiff
