#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "seqrisk/corpus.hpp"
#include "seqrisk/embedding.hpp"
#include "seqrisk/model.hpp"

namespace seqrisk {

inline constexpr double kFactorDisplayThreshold = 0.5;

struct ExplanationRow {
    std::string post_id;
    std::int64_t timestamp = 0;
    std::vector<std::string> factors;  // codes with sigmoid probability > 0.5, risk codes first
    double attention = 0.0;
};

struct ExplanationReport {
    std::string user_id;
    std::size_t window_index = 0;
    std::string target_post_id;
    std::vector<ExplanationRow> rows;
    double s_p = 0.5;
    double s_r = 0.5;
    LevelVector risk_distribution{};
    RiskLevel predicted = RiskLevel::IN;
    std::optional<RiskLevel> truth;
};

ExplanationReport explain_window(const ModelParameters& params, const LabeledWindow& window,
                                 std::size_t window_index, const EmbeddingProvider& embedder,
                                 const ForwardOptions& options);

/// Looks up the user's `window_index`-th window. Throws LookupError naming the
/// user or the index when either does not exist.
const LabeledWindow& find_window(const std::vector<LabeledWindow>& windows, const std::string& user_id,
                                 std::size_t window_index);

nlohmann::ordered_json to_json(const ExplanationReport& report);
std::string format_text(const ExplanationReport& report);

}  // namespace seqrisk
