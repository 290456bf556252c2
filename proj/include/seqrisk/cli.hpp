#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "seqrisk/analysis.hpp"
#include "seqrisk/trainer.hpp"

namespace seqrisk {

/// Runs one `seqrisk` invocation. `args` excludes the program name. Returns
/// the process exit code: 0 on success, 1 on a runtime error, and CLI11's
/// code (nonzero) on a usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Report builders shared by the CLI and the Python module.
nlohmann::ordered_json analysis_report(const std::vector<UserTimeline>& users, int window_length,
                                       const RatingMatrix* ratings = nullptr);
std::string cooccurrence_csv(const CooccurrenceMatrix& matrix);
std::string discrimination_csv(const std::vector<FactorDiscriminationRow>& rows);

struct EvaluationVariant {
    std::string label;  // "full", "w/o DF", ...
    CrossValidationResult result;
};

nlohmann::ordered_json evaluation_report(const TrainConfig& config, const std::vector<EvaluationVariant>& variants,
                                         const GradedScores& baseline);
std::string folds_csv(const nlohmann::json& evaluation);
std::string comparison_csv(const nlohmann::json& evaluation);
std::string sweep_csv(const std::vector<SweepRow>& rows);

/// Reads per-item category counts: header row, then one row per item.
RatingMatrix read_ratings_csv(const std::string& path);

}  // namespace seqrisk
