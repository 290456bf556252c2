#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "seqrisk/catalog.hpp"
#include "seqrisk/corpus.hpp"

namespace seqrisk {

/// Fleiss rating counts: counts[i][j] = raters assigning item i to category j.
struct RatingMatrix {
    std::vector<std::vector<int>> counts;

    std::size_t n_items() const { return counts.size(); }
    std::size_t n_categories() const { return counts.empty() ? 0 : counts.front().size(); }
};

/// Fleiss' kappa. Throws std::invalid_argument on ragged rows, unequal rater
/// counts or fewer than two raters. When every rating lands in one category
/// the result is 1.0 by convention.
double fleiss_kappa(const RatingMatrix& ratings);

/// Rows: factor present / absent. Columns: high-risk / low-risk group.
struct ContingencyTable2x2 {
    long long a = 0, b = 0, c = 0, d = 0;
    long long total() const { return a + b + c + d; }
};

inline constexpr double kChiSquareCritical05 = 3.841;

struct ChiSquareResult {
    double chi2 = 0.0;
    bool significant = false;  // chi2 > 3.841 (df = 1, alpha = 0.05)
};

/// Pearson chi-square without continuity correction.
/// Throws UndefinedResult naming the first zero marginal.
ChiSquareResult chi_square_2x2(const ContingencyTable2x2& t);

inline bool is_high_risk(RiskLevel level) { return level >= RiskLevel::BR; }

struct FactorDiscriminationRow {
    std::string code;
    bool protective = false;
    ContingencyTable2x2 table;
    std::optional<ChiSquareResult> result;  // empty when undefined (e.g. factor never present)
    std::string undefined_reason;
};

/// One row per catalog factor, sorted by chi-square descending with
/// undefined rows last (catalog order among themselves). A window counts the
/// factor as present if any observed post carries it; the group is the
/// window's target level.
std::vector<FactorDiscriminationRow> factor_discrimination(const std::vector<LabeledWindow>& windows);

struct CooccurrenceMatrix {
    /// values[i][j] = P(PF_j | RF_i) over users; meaningful only where defined[i].
    std::array<std::array<double, kNumProtectiveFactors>, kNumRiskFactors> values{};
    std::array<int, kNumRiskFactors> row_counts{};
    std::array<bool, kNumRiskFactors> defined{};
};

/// User-level co-occurrence: a user "has" a factor if any of their posts does.
CooccurrenceMatrix cooccurrence(const std::vector<UserTimeline>& users);

}  // namespace seqrisk
