#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "seqrisk/corpus.hpp"
#include "seqrisk/decoder.hpp"
#include "seqrisk/embedding.hpp"
#include "seqrisk/encoder.hpp"

namespace seqrisk {

/// Task order inside LossBundle and UncertaintyWeights.
enum class Task : int { RiskLevel = 0, Protective = 1, RiskFactor = 2, Dynamic = 3 };
inline constexpr int kNumTasks = 4;

struct LossBundle {
    double sr = 0.0;  // ordinal risk-level loss
    double pf = 0.0;  // protective-factor BCE
    double rf = 0.0;  // risk-factor BCE
    double df = 0.0;  // dynamic factor-integration loss

    std::array<double, kNumTasks> as_array() const { return {sr, pf, rf, df}; }
};

/// Per-task learnable log(sigma), in Task order; 0 means sigma = 1.
struct UncertaintyWeights {
    std::array<double, kNumTasks> log_sigma{};
};

struct Ablations {
    bool disable_rf = false;
    bool disable_pf = false;
    bool disable_df = false;

    bool enabled(Task task) const;
    bool operator==(const Ablations&) const = default;
};

/// sum_k L_k / (2 sigma_k^2) + log sigma_k over enabled tasks.
double total_loss(const LossBundle& losses, const UncertaintyWeights& weights, const Ablations& ablations = {});

struct ModelDims {
    int embedding = kDefaultEmbeddingDim;  // d_e
    int hidden = 16;                        // per-direction recurrent width; pooled width is 2x
    int attention = 16;
    int factor_hidden = 32;
    int risk_hidden = 32;

    int pooled() const { return 2 * hidden; }
    bool operator==(const ModelDims&) const = default;
};

struct ModelParameters {
    ModelDims dims;
    EncoderParams encoder;
    DecoderParams decoder;
    UncertaintyWeights uncertainty;

    static ModelParameters initialize(const ModelDims& dims, std::uint64_t seed);
    static ModelParameters zeros(const ModelDims& dims);
    ModelParameters zeros_like() const { return zeros(dims); }
};

/// Named view of one parameter tensor (column-major storage).
struct TensorView {
    std::string name;
    std::span<double> values;
    Eigen::Index rows = 1;
    Eigen::Index cols = 1;
};

/// Every learnable tensor in a fixed order; names are stable and used by serialization.
std::vector<TensorView> tensors(ModelParameters& params);
std::size_t parameter_count(const ModelParameters& params);
bool all_finite(const ModelParameters& params);

/// A window with everything the model needs, precomputed once per corpus.
struct WindowExample {
    std::size_t window_id = 0;
    std::string user_id;
    Eigen::MatrixXd embeddings;  // l x d_e
    std::vector<double> delta_days;
    Eigen::MatrixXd rf_labels;  // M x l
    Eigen::MatrixXd pf_labels;  // K x l
    RiskLevel last_level = RiskLevel::IN;
    RiskLevel target = RiskLevel::IN;
};

WindowExample make_example(const LabeledWindow& window, const EmbeddingProvider& embedder, std::size_t window_id = 0);
std::vector<WindowExample> make_examples(const std::vector<LabeledWindow>& windows, const EmbeddingProvider& embedder);

struct ForwardOptions {
    double tau = 0.4;
    double alpha = 1.0;
    Ablations ablations;
    PoolingMode pooling = PoolingMode::Raw;
    double dropout = 0.0;  // only applied when an rng is supplied
};

struct WindowOutput {
    Eigen::VectorXd attention;
    Eigen::VectorXd gates;
    AlignmentScores alignment;
    EffectivenessFlags flags;
    LevelVector risk_probs{};
    RiskLevel predicted = RiskLevel::IN;
    bool tied = false;
    Eigen::MatrixXd rf_probs;  // M x l
    Eigen::MatrixXd pf_probs;  // K x l
};

struct BatchResult {
    LossBundle losses;
    double total = 0.0;
    std::vector<WindowOutput> outputs;
};

/// Forward pass over a batch. When `grad` is non-null, accumulates
/// d(total)/d(params) into it (grad must have matching shapes). Dropout masks
/// are drawn from `dropout_rng` when given.
BatchResult evaluate_batch(const ModelParameters& params, std::span<const WindowExample* const> batch,
                           const ForwardOptions& options, ModelParameters* grad = nullptr,
                           std::mt19937_64* dropout_rng = nullptr);

BatchResult evaluate_batch(const ModelParameters& params, const std::vector<WindowExample>& examples,
                           const ForwardOptions& options);

}  // namespace seqrisk
