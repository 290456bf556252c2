#pragma once

#include <span>
#include <vector>

#include "seqrisk/catalog.hpp"

namespace seqrisk {

/// Exact matches, over-predictions and under-predictions.
struct GradedCounts {
    long long tp = 0;
    long long fp = 0;
    long long fn = 0;

    long long total() const { return tp + fp + fn; }
    GradedCounts& operator+=(const GradedCounts& o) {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        return *this;
    }
    bool operator==(const GradedCounts&) const = default;
};

struct GradedScores {
    double gp = 0.0;
    double gr = 0.0;
    double fs = 0.0;
};

GradedCounts graded_counts(std::span<const RiskLevel> preds, std::span<const RiskLevel> truths);

/// Ratios with a zero denominator are 0. Throws std::invalid_argument on all-zero counts.
GradedScores graded_scores(const GradedCounts& counts);

/// Scores of always predicting `level` against `truths`, from label counts alone.
GradedScores constant_prediction_scores(RiskLevel level, std::span<const RiskLevel> truths);

/// Most frequent level; ties go to the lower level.
RiskLevel majority_class(std::span<const RiskLevel> labels);

/// Arithmetic mean of each score across folds, in the given order.
GradedScores mean_scores(std::span<const GradedScores> per_fold);

}  // namespace seqrisk
