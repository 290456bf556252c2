#include "seqrisk/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>
#include <tuple>

#include "seqrisk/errors.hpp"

namespace seqrisk {

void TrainConfig::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw std::invalid_argument(what);
    };
    require(window_length >= 1, "window_length must be >= 1");
    require(tau > 0.0 && std::isfinite(tau), "tau must be positive");
    require(alpha > 0.0 && std::isfinite(alpha), "alpha must be positive");
    require(learning_rate > 0.0 && std::isfinite(learning_rate), "learning_rate must be positive");
    require(dropout >= 0.0 && dropout < 1.0, "dropout must be in [0, 1)");
    require(dims.embedding >= 8 && dims.hidden >= 1 && dims.attention >= 1 && dims.factor_hidden >= 1 &&
                dims.risk_hidden >= 1,
            "model dimensions must be positive (embedding >= 8)");
    require(max_epochs >= 1, "max_epochs must be >= 1");
    require(patience >= 1, "patience must be >= 1");
    require(batch_size >= 1, "batch_size must be >= 1");
    require(validation_fraction >= 0.0 && validation_fraction < 1.0, "validation_fraction must be in [0, 1)");
}

ForwardOptions TrainConfig::forward_options() const {
    ForwardOptions o;
    o.tau = tau;
    o.alpha = alpha;
    o.ablations = ablations;
    o.pooling = pooling;
    o.dropout = dropout;
    return o;
}

nlohmann::ordered_json to_json(const TrainConfig& c) {
    nlohmann::ordered_json j;
    j["window_length"] = c.window_length;
    j["tau"] = c.tau;
    j["alpha"] = c.alpha;
    j["learning_rate"] = c.learning_rate;
    j["dropout"] = c.dropout;
    j["embedding_dim"] = c.dims.embedding;
    j["hidden"] = c.dims.hidden;
    j["attention_dim"] = c.dims.attention;
    j["factor_hidden"] = c.dims.factor_hidden;
    j["risk_hidden"] = c.dims.risk_hidden;
    j["max_epochs"] = c.max_epochs;
    j["patience"] = c.patience;
    j["seed"] = c.seed;
    j["batch_size"] = c.batch_size;
    j["disable_rf"] = c.ablations.disable_rf;
    j["disable_pf"] = c.ablations.disable_pf;
    j["disable_df"] = c.ablations.disable_df;
    j["pooling"] = c.pooling == PoolingMode::Raw ? "raw" : "gated";
    j["validation_fraction"] = c.validation_fraction;
    j["stopping_loss"] = c.stopping_loss == StoppingLoss::Total ? "total" : "risk_level";
    j["embedder"] = c.embedder;
    j["embedding_seed"] = c.embedding_seed;
    return j;
}

TrainConfig config_from_json(const nlohmann::json& j, TrainConfig c) {
    if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (key == "window_length") c.window_length = value.get<int>();
        else if (key == "tau") c.tau = value.get<double>();
        else if (key == "alpha") c.alpha = value.get<double>();
        else if (key == "learning_rate") c.learning_rate = value.get<double>();
        else if (key == "dropout") c.dropout = value.get<double>();
        else if (key == "embedding_dim") c.dims.embedding = value.get<int>();
        else if (key == "hidden") c.dims.hidden = value.get<int>();
        else if (key == "attention_dim") c.dims.attention = value.get<int>();
        else if (key == "factor_hidden") c.dims.factor_hidden = value.get<int>();
        else if (key == "risk_hidden") c.dims.risk_hidden = value.get<int>();
        else if (key == "max_epochs") c.max_epochs = value.get<int>();
        else if (key == "patience") c.patience = value.get<int>();
        else if (key == "seed") c.seed = value.get<std::uint64_t>();
        else if (key == "batch_size") c.batch_size = value.get<int>();
        else if (key == "disable_rf") c.ablations.disable_rf = value.get<bool>();
        else if (key == "disable_pf") c.ablations.disable_pf = value.get<bool>();
        else if (key == "disable_df") c.ablations.disable_df = value.get<bool>();
        else if (key == "pooling") {
            const auto s = value.get<std::string>();
            if (s == "raw") c.pooling = PoolingMode::Raw;
            else if (s == "gated") c.pooling = PoolingMode::Gated;
            else throw std::invalid_argument("unknown pooling mode: " + s);
        } else if (key == "validation_fraction") c.validation_fraction = value.get<double>();
        else if (key == "stopping_loss") {
            const auto s = value.get<std::string>();
            if (s == "total") c.stopping_loss = StoppingLoss::Total;
            else if (s == "risk_level") c.stopping_loss = StoppingLoss::RiskLevel;
            else throw std::invalid_argument("unknown stopping loss: " + s);
        }
        else if (key == "embedder") c.embedder = value.get<std::string>();
        else if (key == "embedding_seed") c.embedding_seed = value.get<std::uint64_t>();
        else throw std::invalid_argument("unknown config key: " + key);
    }
    c.validate();
    return c;
}

std::string ablation_label(const Ablations& a) {
    std::vector<std::string> parts;
    if (a.disable_rf) parts.push_back("RF");
    if (a.disable_pf) parts.push_back("PF");
    if (a.disable_df) parts.push_back("DF");
    if (parts.empty()) return "full";
    std::string label = "w/o ";
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) label += "+";
        label += parts[i];
    }
    return label;
}

EarlyStopping::EarlyStopping(int patience) : patience_(patience) {
    if (patience < 1) throw std::invalid_argument("patience must be >= 1");
}

bool EarlyStopping::update(int epoch, double loss) {
    if (loss < best_loss_) {
        best_loss_ = loss;
        best_epoch_ = epoch;
        since_best_ = 0;
        return true;
    }
    ++since_best_;
    return false;
}

namespace {

class Adam {
  public:
    Adam(const ModelParameters& shape, double lr) : lr_(lr), m_(shape.zeros_like()), v_(shape.zeros_like()) {}

    void step(ModelParameters& params, ModelParameters& grad) {
        ++t_;
        const double c1 = 1.0 - std::pow(kBeta1, t_);
        const double c2 = 1.0 - std::pow(kBeta2, t_);
        auto p = tensors(params);
        auto g = tensors(grad);
        auto m = tensors(m_);
        auto v = tensors(v_);
        for (std::size_t i = 0; i < p.size(); ++i) {
            for (std::size_t j = 0; j < p[i].values.size(); ++j) {
                const double gj = g[i].values[j];
                double& mj = m[i].values[j];
                double& vj = v[i].values[j];
                mj = kBeta1 * mj + (1.0 - kBeta1) * gj;
                vj = kBeta2 * vj + (1.0 - kBeta2) * gj * gj;
                p[i].values[j] -= lr_ * (mj / c1) / (std::sqrt(vj / c2) + kEps);
            }
        }
    }

  private:
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEps = 1e-8;
    double lr_;
    int t_ = 0;
    ModelParameters m_;
    ModelParameters v_;
};

void zero(ModelParameters& grad) {
    for (auto& t : tensors(grad)) std::fill(t.values.begin(), t.values.end(), 0.0);
}

// Losses over a whole set without dropout.
BatchResult full_pass(const ModelParameters& params, const std::vector<const WindowExample*>& set,
                      const ForwardOptions& options) {
    if (set.empty()) return {};
    ForwardOptions o = options;
    o.dropout = 0.0;
    return evaluate_batch(params, std::span<const WindowExample* const>(set.data(), set.size()), o);
}

}  // namespace

TrainResult train(const std::vector<const WindowExample*>& training,
                  const std::vector<const WindowExample*>& validation, const TrainConfig& config) {
    config.validate();
    if (training.empty()) throw std::invalid_argument("training set is empty");
    for (const auto* ex : training) {
        if (ex->embeddings.cols() != config.dims.embedding)
            throw std::invalid_argument("example embedding width does not match the model");
    }

    TrainResult result;
    ModelParameters params = ModelParameters::initialize(config.dims, config.seed);
    ModelParameters best = params;
    ModelParameters grad = params.zeros_like();
    Adam adam(params, config.learning_rate);
    std::mt19937_64 order_rng(config.seed ^ 0x5eed0f0ddULL);
    std::mt19937_64 dropout_rng(config.seed ^ 0xd40f0a7ULL);
    const ForwardOptions options = config.forward_options();

    result.initial_train_total = full_pass(params, training, options).total;

    std::vector<const WindowExample*> order = training;
    const auto batch_size = static_cast<std::size_t>(config.batch_size);
    EarlyStopping stopper(config.patience);

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), order_rng);
        EpochRecord rec;
        rec.epoch = epoch;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += batch_size) {
            const std::size_t n = std::min(batch_size, order.size() - start);
            zero(grad);
            const auto r = evaluate_batch(params, std::span<const WindowExample* const>(order.data() + start, n),
                                          options, &grad, &dropout_rng);
            if (!std::isfinite(r.total)) throw DivergedError(epoch, batches, "non-finite training loss");
            adam.step(params, grad);
            if (!all_finite(params)) throw DivergedError(epoch, batches, "non-finite parameters after update");
            rec.train.sr += r.losses.sr;
            rec.train.pf += r.losses.pf;
            rec.train.rf += r.losses.rf;
            rec.train.df += r.losses.df;
            rec.train_total += r.total;
            ++batches;
        }
        const auto nb = static_cast<double>(batches);
        rec.train.sr /= nb;
        rec.train.pf /= nb;
        rec.train.rf /= nb;
        rec.train.df /= nb;
        rec.train_total /= nb;
        if (validation.empty()) {
            rec.val_total = rec.train_total;
            rec.val_sr = rec.train.sr;
        } else {
            const auto v = full_pass(params, validation, options);
            rec.val_total = v.total;
            rec.val_sr = v.losses.sr;
        }
        if (!std::isfinite(rec.val_total)) throw DivergedError(epoch, batches, "non-finite validation loss");
        rec.log_sigma = params.uncertainty.log_sigma;
        result.history.push_back(rec);
        const double watched = config.stopping_loss == StoppingLoss::Total ? rec.val_total : rec.val_sr;
        if (stopper.update(epoch, watched)) best = params;
        if (stopper.should_stop()) break;
    }

    result.params = std::move(best);
    result.best_epoch = stopper.best_epoch();
    result.final_train_total = full_pass(result.params, training, options).total;
    return result;
}

Dataset Dataset::build(std::vector<UserTimeline> users, int window_length, const EmbeddingProvider& embedder) {
    Dataset d;
    d.users = std::move(users);
    d.windows = build_windows(d.users, window_length);
    d.examples = make_examples(d.windows, embedder);
    return d;
}

std::vector<const WindowExample*> Dataset::select(const std::vector<std::string>& user_ids) const {
    const std::set<std::string> wanted(user_ids.begin(), user_ids.end());
    std::vector<const WindowExample*> out;
    for (const auto& ex : examples) {
        if (wanted.count(ex.user_id)) out.push_back(&ex);
    }
    return out;
}

std::pair<std::vector<std::string>, std::vector<std::string>> validation_split(std::vector<std::string> users,
                                                                               double fraction,
                                                                               std::uint64_t seed) {
    std::sort(users.begin(), users.end());
    std::mt19937_64 rng(seed ^ 0x7a11da7eULL);
    std::shuffle(users.begin(), users.end(), rng);
    std::size_t n_val = static_cast<std::size_t>(std::round(fraction * static_cast<double>(users.size())));
    if (fraction > 0.0 && n_val == 0 && users.size() >= 2) n_val = 1;
    if (n_val >= users.size()) n_val = users.empty() ? 0 : users.size() - 1;
    std::vector<std::string> val(users.begin(), users.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::vector<std::string> fit(users.begin() + static_cast<std::ptrdiff_t>(n_val), users.end());
    return {fit, val};
}

TrainResult train(const Dataset& data, const TrainConfig& config) {
    std::vector<std::string> ids;
    for (const auto& u : data.users) ids.push_back(u.user_id);
    auto [fit, val] = validation_split(ids, config.validation_fraction, config.seed);
    return train(data.select(fit), data.select(val), config);
}

namespace {

std::vector<TestRecord> predict(const ModelParameters& params, const std::vector<const WindowExample*>& test,
                                const ForwardOptions& options) {
    std::vector<TestRecord> out;
    if (test.empty()) return out;
    ForwardOptions o = options;
    o.dropout = 0.0;
    const auto r = evaluate_batch(params, std::span<const WindowExample* const>(test.data(), test.size()), o);
    out.reserve(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) {
        TestRecord rec;
        rec.window_id = test[i]->window_id;
        rec.truth = test[i]->target;
        rec.predicted = r.outputs[i].predicted;
        rec.risk_probs = r.outputs[i].risk_probs;
        rec.s_p = r.outputs[i].alignment.s_p;
        rec.s_r = r.outputs[i].alignment.s_r;
        out.push_back(rec);
    }
    return out;
}

}  // namespace

FoldRunner model_runner(const TrainConfig& config) {
    return [config](const FoldData& fold) {
        TrainConfig c = config;
        c.seed = config.seed + static_cast<std::uint64_t>(fold.fold);
        const auto result = train(fold.train, fold.validation, c);
        FoldOutcome out;
        out.records = predict(result.params, fold.test, c.forward_options());
        out.best_epoch = result.best_epoch;
        out.epochs_run = static_cast<int>(result.history.size());
        return out;
    };
}

FoldRunner majority_runner() {
    return [](const FoldData& fold) {
        std::vector<RiskLevel> labels;
        for (const auto* ex : fold.train) labels.push_back(ex->target);
        const RiskLevel majority = majority_class(labels);
        FoldOutcome out;
        for (const auto* ex : fold.test) {
            TestRecord rec;
            rec.window_id = ex->window_id;
            rec.truth = ex->target;
            rec.predicted = majority;
            out.records.push_back(rec);
        }
        return out;
    };
}

CrossValidationResult cross_validate(const Dataset& data, const TrainConfig& config, int k,
                                     const FoldRunner& runner) {
    config.validate();
    if (data.users.empty()) throw std::invalid_argument("cannot cross-validate an empty corpus");
    const FoldRunner active = runner ? runner : model_runner(config);

    CrossValidationResult result;
    result.folds = split_users(data.users, k, config.seed);
    std::vector<GradedScores> scores;
    for (int f = 0; f < k; ++f) {
        const auto test_users = result.folds.test_users(f);
        const auto [fit_users, val_users] =
            validation_split(result.folds.train_users(f), config.validation_fraction, config.seed + f);

        std::set<std::string> seen;
        for (const std::vector<std::string>* group : {&test_users, &fit_users, &val_users}) {
            for (const auto& u : *group) {
                if (!seen.insert(u).second)
                    throw std::logic_error("fold " + std::to_string(f) + ": user " + u + " appears in two splits");
            }
        }

        FoldData fold;
        fold.fold = f;
        fold.train = data.select(fit_users);
        fold.validation = data.select(val_users);
        fold.test = data.select(test_users);
        if (fold.test.empty()) continue;

        FoldOutcome outcome;
        try {
            outcome = active(fold);
        } catch (const DivergedError& e) {
            throw DivergedError(e.epoch(), e.batch(), "fold " + std::to_string(f) + ": " + e.what());
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("fold " + std::to_string(f) + ": " + e.what());
        } catch (const std::exception& e) {
            throw std::runtime_error("fold " + std::to_string(f) + ": " + e.what());
        }
        if (outcome.records.size() != fold.test.size())
            throw std::logic_error("fold runner returned the wrong number of predictions");

        FoldResult fr;
        fr.fold = f;
        fr.n_train = fold.train.size();
        fr.n_validation = fold.validation.size();
        fr.n_test = fold.test.size();
        std::vector<RiskLevel> preds, truths;
        for (const auto& r : outcome.records) {
            preds.push_back(r.predicted);
            truths.push_back(r.truth);
        }
        fr.counts = graded_counts(preds, truths);
        fr.scores = graded_scores(fr.counts);
        fr.best_epoch = outcome.best_epoch;
        fr.epochs_run = outcome.epochs_run;
        fr.records = std::move(outcome.records);
        scores.push_back(fr.scores);
        result.per_fold.push_back(std::move(fr));
    }
    if (scores.empty()) throw std::invalid_argument("no fold has test windows");
    result.mean = mean_scores(scores);
    return result;
}

GradedScores majority_baseline(const Dataset& data, const FoldAssignment& folds) {
    std::vector<GradedScores> scores;
    for (int f = 0; f < folds.k; ++f) {
        std::vector<RiskLevel> train_labels, test_labels;
        const auto test_users = folds.test_users(f);
        const std::set<std::string> test_set(test_users.begin(), test_users.end());
        for (const auto& ex : data.examples) {
            (test_set.count(ex.user_id) ? test_labels : train_labels).push_back(ex.target);
        }
        if (test_labels.empty() || train_labels.empty()) continue;
        scores.push_back(constant_prediction_scores(majority_class(train_labels), test_labels));
    }
    return mean_scores(scores);
}

std::vector<TrainConfig> HyperGrid::expand(const TrainConfig& base) const {
    auto axis = [](std::vector<double> v, double fallback) {
        if (v.empty()) v.push_back(fallback);
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        return v;
    };
    const auto lrs = axis(learning_rate, base.learning_rate);
    const auto drops = axis(dropout, base.dropout);
    std::vector<double> hid_d(hidden.begin(), hidden.end());
    const auto hids = axis(hid_d, base.dims.hidden);
    const auto alphas = axis(alpha, base.alpha);
    const auto taus = axis(tau, base.tau);
    std::vector<TrainConfig> out;
    for (double lr : lrs)
        for (double d : drops)
            for (double h : hids)
                for (double a : alphas)
                    for (double t : taus) {
                        TrainConfig c = base;
                        c.learning_rate = lr;
                        c.dropout = d;
                        c.dims.hidden = static_cast<int>(h);
                        c.alpha = a;
                        c.tau = t;
                        out.push_back(c);
                    }
    return out;
}

bool config_less(const TrainConfig& a, const TrainConfig& b) {
    auto key = [](const TrainConfig& c) {
        return std::make_tuple(c.learning_rate, c.dropout, c.dims.hidden, c.alpha, c.tau, c.ablations.disable_rf,
                               c.ablations.disable_pf, c.ablations.disable_df);
    };
    return key(a) < key(b);
}

GridSearchResult grid_search(std::vector<TrainConfig> candidates, const ConfigEvaluator& evaluate) {
    if (candidates.empty()) throw std::invalid_argument("grid search needs at least one candidate");
    std::stable_sort(candidates.begin(), candidates.end(), config_less);
    GridSearchResult result;
    for (auto& c : candidates) {
        GridEntry e{c, evaluate(c)};
        if (result.entries.empty() || e.mean.fs > result.entries[result.best].mean.fs)
            result.best = result.entries.size();
        result.entries.push_back(std::move(e));
    }
    return result;
}

GridSearchResult grid_search(const std::vector<UserTimeline>& users, const std::vector<TrainConfig>& candidates,
                             int k) {
    return grid_search(candidates, [&](const TrainConfig& c) {
        const auto embedder = make_provider(c.embedder, c.dims.embedding, c.embedding_seed);
        const auto data = Dataset::build(users, c.window_length, *embedder);
        return cross_validate(data, c, k).mean;
    });
}

std::vector<SweepRow> sweep(const std::vector<UserTimeline>& users, const TrainConfig& base,
                            SweepParameter parameter, const std::vector<double>& values, int k) {
    std::vector<SweepRow> rows;
    const auto embedder = make_provider(base.embedder, base.dims.embedding, base.embedding_seed);
    for (double value : values) {
        TrainConfig c = base;
        if (parameter == SweepParameter::WindowLength) {
            if (value < 1.0 || value != std::floor(value))
                throw std::invalid_argument("window length must be a positive integer");
            c.window_length = static_cast<int>(value);
        } else {
            c.tau = value;
        }
        c.validate();
        const auto data = Dataset::build(users, c.window_length, *embedder);
        SweepRow row;
        row.value = value;
        row.n_windows = data.examples.size();
        if (!data.examples.empty()) row.scores = cross_validate(data, c, k).mean;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace seqrisk
