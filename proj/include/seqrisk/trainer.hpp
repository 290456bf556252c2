#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "seqrisk/corpus.hpp"
#include "seqrisk/embedding.hpp"
#include "seqrisk/metrics.hpp"
#include "seqrisk/model.hpp"

namespace seqrisk {

/// Validation quantity watched by early stopping.
enum class StoppingLoss { Total, RiskLevel };

struct TrainConfig {
    int window_length = 4;
    double tau = 0.4;
    double alpha = 1.0;
    double learning_rate = 1e-3;
    double dropout = 0.3;
    ModelDims dims;
    int max_epochs = 200;
    int patience = 10;
    std::uint64_t seed = 0;
    int batch_size = 32;
    Ablations ablations;
    PoolingMode pooling = PoolingMode::Raw;
    double validation_fraction = 0.1;
    StoppingLoss stopping_loss = StoppingLoss::Total;
    std::string embedder = "hash";
    std::uint64_t embedding_seed = 0;

    void validate() const;
    ForwardOptions forward_options() const;
};

nlohmann::ordered_json to_json(const TrainConfig& config);
/// Missing keys keep their defaults; unknown keys are rejected.
TrainConfig config_from_json(const nlohmann::json& j, TrainConfig base = {});

/// Label used in comparison tables: "full", "w/o RF", "w/o PF", "w/o DF", or a '+'-joined combination.
std::string ablation_label(const Ablations& ablations);

/// Tracks the best validation loss and decides when to stop.
class EarlyStopping {
  public:
    explicit EarlyStopping(int patience);

    /// Records an epoch's validation loss; returns true when it is a new best.
    bool update(int epoch, double loss);
    bool should_stop() const { return since_best_ >= patience_; }
    int best_epoch() const { return best_epoch_; }
    double best_loss() const { return best_loss_; }

  private:
    int patience_;
    int since_best_ = 0;
    int best_epoch_ = 0;
    double best_loss_ = std::numeric_limits<double>::infinity();
};

struct EpochRecord {
    int epoch = 0;
    LossBundle train;    // mean over the epoch's batches
    double train_total = 0.0;
    double val_total = 0.0;
    double val_sr = 0.0;
    std::array<double, kNumTasks> log_sigma{};
};

struct TrainResult {
    ModelParameters params;  // from the best validation epoch
    std::vector<EpochRecord> history;
    int best_epoch = 0;
    double initial_train_total = 0.0;  // full pass, no dropout, before the first step
    double final_train_total = 0.0;    // full pass, no dropout, with the returned params
};

/// Adam on the uncertainty-weighted objective. Uses `validation` for early
/// stopping, or the epoch's training loss when it is empty. Throws
/// std::invalid_argument on an empty training set and DivergedError on a
/// non-finite loss.
TrainResult train(const std::vector<const WindowExample*>& training,
                  const std::vector<const WindowExample*>& validation, const TrainConfig& config);

/// Windows + examples for one corpus under one window length and embedder.
struct Dataset {
    std::vector<UserTimeline> users;
    std::vector<LabeledWindow> windows;
    std::vector<WindowExample> examples;

    static Dataset build(std::vector<UserTimeline> users, int window_length, const EmbeddingProvider& embedder);
    std::vector<const WindowExample*> select(const std::vector<std::string>& user_ids) const;
};

/// Splits `train_users` into (fit, validation) user sets, deterministic in seed.
std::pair<std::vector<std::string>, std::vector<std::string>> validation_split(
    std::vector<std::string> train_users, double fraction, std::uint64_t seed);

/// Trains on the whole corpus, holding out a user-disjoint validation split.
TrainResult train(const Dataset& data, const TrainConfig& config);

struct TestRecord {
    std::size_t window_id = 0;
    RiskLevel truth = RiskLevel::IN;
    RiskLevel predicted = RiskLevel::IN;
    LevelVector risk_probs{};
    double s_p = 0.5;
    double s_r = 0.5;
};

struct FoldData {
    int fold = 0;
    std::vector<const WindowExample*> train;
    std::vector<const WindowExample*> validation;
    std::vector<const WindowExample*> test;
};

struct FoldOutcome {
    std::vector<TestRecord> records;  // one per test window, in test order
    int best_epoch = 0;
    int epochs_run = 0;
};

/// Strategy that fits on a fold and predicts its test windows.
using FoldRunner = std::function<FoldOutcome(const FoldData&)>;

FoldRunner model_runner(const TrainConfig& config);
/// Predicts the majority target of the fold's training windows for every test window.
FoldRunner majority_runner();

struct FoldResult {
    int fold = 0;
    std::size_t n_train = 0;
    std::size_t n_validation = 0;
    std::size_t n_test = 0;
    GradedCounts counts;
    GradedScores scores;
    int best_epoch = 0;
    int epochs_run = 0;
    std::vector<TestRecord> records;
};

struct CrossValidationResult {
    FoldAssignment folds;
    std::vector<FoldResult> per_fold;
    GradedScores mean;
};

/// User-disjoint k-fold evaluation. Folds without test windows are skipped.
/// Errors from a fold are rethrown with the fold index prepended.
CrossValidationResult cross_validate(const Dataset& data, const TrainConfig& config, int k = 5,
                                     const FoldRunner& runner = {});

/// Mean over folds of the majority-class scores, computed from label counts.
GradedScores majority_baseline(const Dataset& data, const FoldAssignment& folds);

struct HyperGrid {
    std::vector<double> learning_rate;
    std::vector<double> dropout;
    std::vector<int> hidden;
    std::vector<double> alpha;
    std::vector<double> tau;

    /// Cartesian product over `base`; empty axes keep the base value.
    std::vector<TrainConfig> expand(const TrainConfig& base) const;
};

struct GridEntry {
    TrainConfig config;
    GradedScores mean;
};

struct GridSearchResult {
    std::vector<GridEntry> entries;  // in lexicographic config order
    std::size_t best = 0;
};

/// Lexicographic order over (learning_rate, dropout, hidden, alpha, tau, ablations).
bool config_less(const TrainConfig& a, const TrainConfig& b);

using ConfigEvaluator = std::function<GradedScores(const TrainConfig&)>;

/// Exhaustive search by mean FS; ties go to the lexicographically smaller config.
GridSearchResult grid_search(std::vector<TrainConfig> candidates, const ConfigEvaluator& evaluate);
GridSearchResult grid_search(const std::vector<UserTimeline>& users, const std::vector<TrainConfig>& candidates,
                             int k = 5);

struct SweepRow {
    double value = 0.0;
    std::size_t n_windows = 0;
    GradedScores scores;
};

enum class SweepParameter { WindowLength, Tau };

/// One cross-validation per value of the swept parameter.
std::vector<SweepRow> sweep(const std::vector<UserTimeline>& users, const TrainConfig& base,
                            SweepParameter parameter, const std::vector<double>& values, int k = 5);

}  // namespace seqrisk
