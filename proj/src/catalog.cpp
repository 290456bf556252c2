#include "seqrisk/catalog.hpp"

#include <stdexcept>

namespace seqrisk {

namespace {
constexpr std::array<std::string_view, kNumLevels> kLevelCodes = {"IN", "ID", "BR", "AT"};
}

RiskLevel level_from_index(int index) {
    if (index < 0 || index >= kNumLevels) {
        throw std::invalid_argument("risk level index out of range: " + std::to_string(index));
    }
    return static_cast<RiskLevel>(index);
}

std::string_view level_code(RiskLevel level) { return kLevelCodes[level_index(level)]; }

std::optional<RiskLevel> parse_level(std::string_view code) {
    for (int i = 0; i < kNumLevels; ++i) {
        if (kLevelCodes[i] == code) return static_cast<RiskLevel>(i);
    }
    return std::nullopt;
}

std::optional<std::size_t> FactorCatalog::risk_index(std::string_view code) {
    for (std::size_t i = 0; i < risk_codes.size(); ++i) {
        if (risk_codes[i] == code) return i;
    }
    return std::nullopt;
}

std::optional<std::size_t> FactorCatalog::protective_index(std::string_view code) {
    for (std::size_t i = 0; i < protective_codes.size(); ++i) {
        if (protective_codes[i] == code) return i;
    }
    return std::nullopt;
}

std::string_view FactorCatalog::factor_code(std::size_t combined_index) {
    if (combined_index < kNumRiskFactors) return risk_codes[combined_index];
    if (combined_index < kNumFactors) return protective_codes[combined_index - kNumRiskFactors];
    throw std::out_of_range("factor index out of range");
}

std::optional<std::size_t> FactorCatalog::factor_index(std::string_view code) {
    if (auto r = risk_index(code)) return r;
    if (auto p = protective_index(code)) return kNumRiskFactors + *p;
    return std::nullopt;
}

}  // namespace seqrisk
