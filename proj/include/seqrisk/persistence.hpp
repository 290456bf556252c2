#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include <nlohmann/json.hpp>

#include "seqrisk/model.hpp"
#include "seqrisk/trainer.hpp"

namespace seqrisk {

inline constexpr std::uint32_t kModelFormatVersion = 1;

/// Binary layout: magic "SQRKMDL\0", u32 version, five u32 dimensions,
/// u32 tensor count, then per tensor (u32 name length, name bytes, u32 rows,
/// u32 cols), then every tensor's values as little-endian float64 in table
/// order. Throws FormatError on a bad magic, unsupported version, truncated
/// data or a tensor table that does not match the dimensions.
void write_model(std::ostream& out, const ModelParameters& params);
ModelParameters read_model(std::istream& in);
void save_model(const std::filesystem::path& path, const ModelParameters& params);
ModelParameters load_model(const std::filesystem::path& path);

void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history);

nlohmann::ordered_json folds_to_json(const FoldAssignment& folds);
FoldAssignment folds_from_json(const nlohmann::json& j);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace seqrisk
