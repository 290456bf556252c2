#include "seqrisk/analysis.hpp"

#include <algorithm>
#include <stdexcept>

#include "seqrisk/errors.hpp"

namespace seqrisk {

double fleiss_kappa(const RatingMatrix& ratings) {
    const auto n_items = ratings.n_items();
    const auto n_categories = ratings.n_categories();
    if (n_items == 0 || n_categories == 0) throw std::invalid_argument("rating matrix is empty");

    long long raters = -1;
    std::vector<double> category_totals(n_categories, 0.0);
    double agreement_sum = 0.0;
    for (const auto& row : ratings.counts) {
        if (row.size() != n_categories) throw std::invalid_argument("ragged rating matrix");
        long long n = 0, squares = 0;
        for (std::size_t j = 0; j < n_categories; ++j) {
            if (row[j] < 0) throw std::invalid_argument("negative rating count");
            n += row[j];
            squares += static_cast<long long>(row[j]) * row[j];
            category_totals[j] += row[j];
        }
        if (raters < 0) raters = n;
        if (n != raters) throw std::invalid_argument("items have different rater counts");
        if (n < 2) throw std::invalid_argument("fleiss kappa needs at least two raters");
        agreement_sum += static_cast<double>(squares - n) / static_cast<double>(n * (n - 1));
    }
    const double observed = agreement_sum / static_cast<double>(n_items);
    const double total = static_cast<double>(n_items) * static_cast<double>(raters);
    double expected = 0.0;
    for (double t : category_totals) expected += (t / total) * (t / total);

    constexpr double kTol = 1e-12;
    if (expected >= 1.0 - kTol) {
        if (observed >= 1.0 - kTol) return 1.0;
        throw UndefinedResult("fleiss kappa undefined: chance agreement is 1");
    }
    return (observed - expected) / (1.0 - expected);
}

ChiSquareResult chi_square_2x2(const ContingencyTable2x2& t) {
    if (t.a < 0 || t.b < 0 || t.c < 0 || t.d < 0) throw std::invalid_argument("negative cell count");
    const double row1 = static_cast<double>(t.a + t.b);
    const double row2 = static_cast<double>(t.c + t.d);
    const double col1 = static_cast<double>(t.a + t.c);
    const double col2 = static_cast<double>(t.b + t.d);
    if (row1 == 0) throw UndefinedResult("zero marginal: factor-present row (a+b)");
    if (row2 == 0) throw UndefinedResult("zero marginal: factor-absent row (c+d)");
    if (col1 == 0) throw UndefinedResult("zero marginal: high-risk column (a+c)");
    if (col2 == 0) throw UndefinedResult("zero marginal: low-risk column (b+d)");
    const double n = row1 + row2;
    const double cross = static_cast<double>(t.a) * static_cast<double>(t.d) -
                         static_cast<double>(t.b) * static_cast<double>(t.c);
    ChiSquareResult r;
    r.chi2 = n * cross * cross / (row1 * row2 * col1 * col2);
    r.significant = r.chi2 > kChiSquareCritical05;
    return r;
}

std::vector<FactorDiscriminationRow> factor_discrimination(const std::vector<LabeledWindow>& windows) {
    if (windows.empty()) throw std::invalid_argument("factor discrimination needs at least one window");

    std::vector<FactorDiscriminationRow> rows(kNumFactors);
    for (std::size_t f = 0; f < kNumFactors; ++f) {
        rows[f].code = std::string(FactorCatalog::factor_code(f));
        rows[f].protective = f >= kNumRiskFactors;
    }
    for (const auto& w : windows) {
        std::array<bool, kNumFactors> present{};
        for (const auto& post : w.observed) {
            for (const auto& code : post.risk_factors) present[*FactorCatalog::factor_index(code)] = true;
            for (const auto& code : post.protective_factors) {
                present[kNumRiskFactors + *FactorCatalog::protective_index(code)] = true;
            }
        }
        const bool high = is_high_risk(w.target_level);
        for (std::size_t f = 0; f < kNumFactors; ++f) {
            auto& t = rows[f].table;
            if (present[f]) {
                ++(high ? t.a : t.b);
            } else {
                ++(high ? t.c : t.d);
            }
        }
    }
    for (auto& row : rows) {
        try {
            row.result = chi_square_2x2(row.table);
        } catch (const UndefinedResult& e) {
            row.undefined_reason = row.table.a + row.table.b == 0 ? "factor never present" : e.what();
        }
    }
    std::stable_sort(rows.begin(), rows.end(), [](const auto& x, const auto& y) {
        if (x.result.has_value() != y.result.has_value()) return x.result.has_value();
        if (!x.result) return false;
        return x.result->chi2 > y.result->chi2;
    });
    return rows;
}

CooccurrenceMatrix cooccurrence(const std::vector<UserTimeline>& users) {
    CooccurrenceMatrix m;
    std::array<std::array<int, kNumProtectiveFactors>, kNumRiskFactors> joint{};
    for (const auto& user : users) {
        std::array<bool, kNumRiskFactors> has_r{};
        std::array<bool, kNumProtectiveFactors> has_p{};
        for (const auto& post : user.posts) {
            for (const auto& code : post.risk_factors) has_r[*FactorCatalog::risk_index(code)] = true;
            for (const auto& code : post.protective_factors) has_p[*FactorCatalog::protective_index(code)] = true;
        }
        for (std::size_t i = 0; i < kNumRiskFactors; ++i) {
            if (!has_r[i]) continue;
            ++m.row_counts[i];
            for (std::size_t j = 0; j < kNumProtectiveFactors; ++j) {
                if (has_p[j]) ++joint[i][j];
            }
        }
    }
    for (std::size_t i = 0; i < kNumRiskFactors; ++i) {
        m.defined[i] = m.row_counts[i] > 0;
        for (std::size_t j = 0; j < kNumProtectiveFactors; ++j) {
            m.values[i][j] = m.defined[i] ? static_cast<double>(joint[i][j]) / m.row_counts[i] : 0.0;
        }
    }
    return m;
}

}  // namespace seqrisk
