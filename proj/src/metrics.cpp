#include "seqrisk/metrics.hpp"

#include <array>
#include <stdexcept>

namespace seqrisk {

GradedCounts graded_counts(std::span<const RiskLevel> preds, std::span<const RiskLevel> truths) {
    if (preds.size() != truths.size()) throw std::invalid_argument("prediction and truth lengths differ");
    if (preds.empty()) throw std::invalid_argument("graded counts need at least one prediction");
    GradedCounts c;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (preds[i] == truths[i]) {
            ++c.tp;
        } else if (preds[i] > truths[i]) {
            ++c.fp;
        } else {
            ++c.fn;
        }
    }
    return c;
}

GradedScores graded_scores(const GradedCounts& c) {
    if (c.tp < 0 || c.fp < 0 || c.fn < 0) throw std::invalid_argument("negative graded count");
    if (c.total() == 0) throw std::invalid_argument("graded scores need at least one prediction");
    auto ratio = [](long long num, long long den) {
        return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
    };
    GradedScores s;
    s.gp = ratio(c.tp, c.tp + c.fp);
    s.gr = ratio(c.tp, c.tp + c.fn);
    s.fs = s.gp + s.gr == 0.0 ? 0.0 : 2.0 * s.gp * s.gr / (s.gp + s.gr);
    return s;
}

GradedScores constant_prediction_scores(RiskLevel level, std::span<const RiskLevel> truths) {
    GradedCounts c;
    for (auto t : truths) {
        if (t == level) {
            ++c.tp;
        } else if (t < level) {
            ++c.fp;
        } else {
            ++c.fn;
        }
    }
    return graded_scores(c);
}

RiskLevel majority_class(std::span<const RiskLevel> labels) {
    if (labels.empty()) throw std::invalid_argument("majority class of an empty label set");
    std::array<long long, kNumLevels> counts{};
    for (auto l : labels) ++counts[level_index(l)];
    int best = 0;
    for (int k = 1; k < kNumLevels; ++k) {
        if (counts[k] > counts[best]) best = k;
    }
    return level_from_index(best);
}

GradedScores mean_scores(std::span<const GradedScores> per_fold) {
    if (per_fold.empty()) throw std::invalid_argument("no fold scores to average");
    GradedScores m;
    for (const auto& s : per_fold) {
        m.gp += s.gp;
        m.gr += s.gr;
        m.fs += s.fs;
    }
    const auto n = static_cast<double>(per_fold.size());
    m.gp /= n;
    m.gr /= n;
    m.fs /= n;
    return m;
}

}  // namespace seqrisk
