#include "seqrisk/explain.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include "seqrisk/errors.hpp"

namespace seqrisk {

ExplanationReport explain_window(const ModelParameters& params, const LabeledWindow& window,
                                 std::size_t window_index, const EmbeddingProvider& embedder,
                                 const ForwardOptions& options) {
    const WindowExample ex = make_example(window, embedder, window_index);
    ForwardOptions o = options;
    o.dropout = 0.0;
    const WindowExample* batch[] = {&ex};
    const auto result = evaluate_batch(params, std::span<const WindowExample* const>(batch, 1), o);
    const auto& out = result.outputs.front();

    ExplanationReport r;
    r.user_id = window.user_id;
    r.window_index = window_index;
    r.target_post_id = window.target_post_id;
    for (std::size_t t = 0; t < window.observed.size(); ++t) {
        const auto col = static_cast<Eigen::Index>(t);
        ExplanationRow row;
        row.post_id = window.observed[t].post_id;
        row.timestamp = window.observed[t].timestamp;
        for (std::size_t m = 0; m < kNumRiskFactors; ++m) {
            if (out.rf_probs(static_cast<Eigen::Index>(m), col) > kFactorDisplayThreshold) row.factors.emplace_back(FactorCatalog::risk_codes[m]);
        }
        for (std::size_t k = 0; k < kNumProtectiveFactors; ++k) {
            if (out.pf_probs(static_cast<Eigen::Index>(k), col) > kFactorDisplayThreshold)
                row.factors.emplace_back(FactorCatalog::protective_codes[k]);
        }
        row.attention = out.attention(col);
        r.rows.push_back(std::move(row));
    }
    r.s_p = out.alignment.s_p;
    r.s_r = out.alignment.s_r;
    r.risk_distribution = out.risk_probs;
    r.predicted = out.predicted;
    r.truth = window.target_level;
    return r;
}

const LabeledWindow& find_window(const std::vector<LabeledWindow>& windows, const std::string& user_id,
                                 std::size_t window_index) {
    std::size_t seen = 0;
    bool user_found = false;
    for (const auto& w : windows) {
        if (w.user_id != user_id) continue;
        user_found = true;
        if (seen == window_index) return w;
        ++seen;
    }
    if (!user_found) throw LookupError("unknown user: " + user_id);
    throw LookupError("user " + user_id + " has no window " + std::to_string(window_index) + " (has " +
                      std::to_string(seen) + ")");
}

nlohmann::ordered_json to_json(const ExplanationReport& r) {
    nlohmann::ordered_json j;
    j["user_id"] = r.user_id;
    j["window_index"] = r.window_index;
    j["target_post_id"] = r.target_post_id;
    auto posts = nlohmann::ordered_json::array();
    for (const auto& row : r.rows) {
        nlohmann::ordered_json p;
        p["post_id"] = row.post_id;
        p["timestamp"] = row.timestamp;
        p["factors"] = row.factors;
        p["attention"] = row.attention;
        posts.push_back(p);
    }
    j["posts"] = posts;
    j["s_p"] = r.s_p;
    j["s_r"] = r.s_r;
    nlohmann::ordered_json dist;
    for (int k = 0; k < kNumLevels; ++k) dist[std::string(level_code(level_from_index(k)))] = r.risk_distribution[k];
    j["risk_distribution"] = dist;
    j["predicted_level"] = std::string(level_code(r.predicted));
    j["true_level"] = r.truth ? nlohmann::ordered_json(std::string(level_code(*r.truth))) : nlohmann::ordered_json(nullptr);
    return j;
}

std::string format_text(const ExplanationReport& r) {
    std::size_t id_width = 7;
    for (const auto& row : r.rows) id_width = std::max(id_width, row.post_id.size());
    std::ostringstream s;
    s << "user " << r.user_id << "  window " << r.window_index << "  target " << r.target_post_id << "\n";
    s << std::left << std::setw(static_cast<int>(id_width)) << "post_id" << "  " << std::setw(12) << "timestamp"
      << "  " << std::setw(9) << "attention" << "  factors\n";
    s << std::fixed;
    for (const auto& row : r.rows) {
        std::string codes;
        for (const auto& c : row.factors) codes += (codes.empty() ? "" : ",") + c;
        if (codes.empty()) codes = "-";
        s << std::left << std::setw(static_cast<int>(id_width)) << row.post_id << "  " << std::setw(12)
          << row.timestamp << "  " << std::right << std::setw(9) << std::setprecision(4) << row.attention << "  "
          << codes << "\n";
    }
    s << std::setprecision(4) << "S_p " << r.s_p << "  S_r " << r.s_r << "\n";
    s << "risk";
    for (int k = 0; k < kNumLevels; ++k) s << "  " << level_code(level_from_index(k)) << " " << r.risk_distribution[k];
    s << "\npredicted " << level_code(r.predicted);
    if (r.truth) s << "  true " << level_code(*r.truth);
    s << "\n";
    return s.str();
}

}  // namespace seqrisk
