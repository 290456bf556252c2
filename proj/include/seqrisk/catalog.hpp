#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace seqrisk {

/// Ordinal suicide-risk level. Numeric values are the ordinal codes.
enum class RiskLevel : int { IN = 0, ID = 1, BR = 2, AT = 3 };

inline constexpr int kNumLevels = 4;
inline constexpr std::size_t kNumRiskFactors = 19;
inline constexpr std::size_t kNumProtectiveFactors = 5;
inline constexpr std::size_t kNumFactors = kNumRiskFactors + kNumProtectiveFactors;

inline constexpr int level_index(RiskLevel level) { return static_cast<int>(level); }

RiskLevel level_from_index(int index);
std::string_view level_code(RiskLevel level);
std::optional<RiskLevel> parse_level(std::string_view code);

/// Fixed factor taxonomy. Positions in these arrays are the label-vector
/// indices used everywhere else.
struct FactorCatalog {
    static constexpr std::array<std::string_view, kNumRiskFactors> risk_codes = {
        "MHI", "PH",  "SU", "HL", "ED", "LS",  "PSP", "LSS", "IV",  "PSST",
        "PSS", "ID",  "DF", "EOS", "SLE", "TE", "CD",  "SM",  "SORI"};
    static constexpr std::array<std::string_view, kNumProtectiveFactors> protective_codes = {
        "SS", "CS", "PC", "SR", "ML"};

    static std::optional<std::size_t> risk_index(std::string_view code);
    static std::optional<std::size_t> protective_index(std::string_view code);

    /// Combined index space: risk codes first, then protective codes.
    static std::string_view factor_code(std::size_t combined_index);
    static std::optional<std::size_t> factor_index(std::string_view code);
};

}  // namespace seqrisk
