#pragma once

#include <array>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "seqrisk/catalog.hpp"

namespace seqrisk {

inline constexpr double kLogClampEpsilon = 1e-7;

struct DenseLayer {
    Eigen::MatrixXd W;  // out x in
    Eigen::VectorXd b;  // out

    static DenseLayer zeros(int in, int out);
    /// Uniform in +-1/sqrt(in) for weights and bias.
    static DenseLayer random(int in, int out, std::mt19937_64& rng);
    int in() const { return static_cast<int>(W.cols()); }
    int out() const { return static_cast<int>(W.rows()); }
};

/// Risk-factor head, protective-factor head and risk-level head.
/// Factor heads: embed = ReLU(embed(ReLU(hidden(e)))), logits = out(embed).
/// Risk head: logits = out(ReLU(hidden(u))).
struct DecoderParams {
    DenseLayer rf_hidden, rf_embed, rf_out;  // d_e -> d_f -> d_u -> M
    DenseLayer pf_hidden, pf_embed, pf_out;  // d_e -> d_f -> d_u -> K
    DenseLayer risk_hidden, risk_out;        // d_u -> d_r -> 4

    static DecoderParams zeros(int input_dim, int factor_hidden, int pooled_dim, int risk_hidden);
    static DecoderParams random(int input_dim, int factor_hidden, int pooled_dim, int risk_hidden,
                                std::mt19937_64& rng);
    int pooled_dim() const { return rf_embed.out(); }
};

// ---- factor heads -------------------------------------------------------

struct FactorPrediction {
    Eigen::VectorXd e_minus;  // risk-factor embedding
    Eigen::VectorXd e_plus;   // protective-factor embedding
    Eigen::VectorXd rf_logits;
    Eigen::VectorXd pf_logits;
};

/// Activations of one factor head over a window; column t is post t.
struct FactorHeadTrace {
    Eigen::MatrixXd hidden_pre;
    Eigen::MatrixXd hidden;  // ReLU then dropout
    Eigen::MatrixXd mask;    // dropout mask including 1/(1-p) scaling; empty when no dropout
    Eigen::MatrixXd embed_pre;
    Eigen::MatrixXd embed;
    Eigen::MatrixXd logits;
};

FactorPrediction factor_heads(const Eigen::VectorXd& e, const DecoderParams& params);

/// X is d_e x l. Pass a non-null rng and dropout > 0 to sample a dropout mask.
FactorHeadTrace factor_head_forward(const Eigen::MatrixXd& X, const DenseLayer& hidden, const DenseLayer& embed,
                                    const DenseLayer& out, double dropout = 0.0, std::mt19937_64* rng = nullptr);
void factor_head_backward(const Eigen::MatrixXd& X, const FactorHeadTrace& trace, const Eigen::MatrixXd& d_embed,
                          const Eigen::MatrixXd& d_logits, const DenseLayer& embed, const DenseLayer& out,
                          DenseLayer& g_hidden, DenseLayer& g_embed, DenseLayer& g_out);

// ---- factor losses ------------------------------------------------------

/// Binary cross-entropy on sigmoid(logit), in the overflow-free log-sigmoid form.
double bce_with_logit(double logit, double label);

/// Sum of per-label BCE for one post.
double multilabel_bce(const Eigen::VectorXd& logits, const Eigen::VectorXd& labels);

struct FactorLosses {
    double rf = 0.0;
    double pf = 0.0;
};

/// Per-post multilabel BCE summed over labels and averaged over the window's
/// posts (columns).
FactorLosses factor_losses(const Eigen::MatrixXd& rf_logits, const Eigen::MatrixXd& pf_logits,
                           const Eigen::MatrixXd& y_rf, const Eigen::MatrixXd& y_pf);

// ---- effectiveness and alignment ---------------------------------------

struct EffectivenessFlags {
    bool protective = false;  // E_p: level went down
    bool risk = false;        // E_r: level went up

    bool any() const { return protective || risk; }
};

EffectivenessFlags effectiveness(RiskLevel last_observed, RiskLevel target);

/// Cosine similarity; 0 when either vector has zero norm.
double cosine_similarity(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

struct AlignmentScores {
    double s_p = 0.5;
    double s_r = 0.5;
    double log_s_p = -0.6931471805599453;
    double log_s_r = -0.6931471805599453;
    Eigen::VectorXd sim_plus;
    Eigen::VectorXd sim_minus;
};

/// Temperature-scaled alignment of u against per-post protective (e_plus)
/// and risk (e_minus) embeddings; both are d_u x l.
AlignmentScores alignment(const Eigen::VectorXd& u, const Eigen::MatrixXd& e_plus, const Eigen::MatrixXd& e_minus,
                          double tau);

struct AlignmentGrad {
    Eigen::VectorXd d_u;
    Eigen::MatrixXd d_plus;
    Eigen::MatrixXd d_minus;
};

/// Backpropagates dL/dlog(S_p) and dL/dlog(S_r).
AlignmentGrad alignment_backward(const Eigen::VectorXd& u, const Eigen::MatrixXd& e_plus,
                                 const Eigen::MatrixXd& e_minus, double tau, const AlignmentScores& scores,
                                 double d_log_s_p, double d_log_s_r);

/// Per-sequence dynamic-integration term and its derivatives w.r.t. log S_p, log S_r.
struct DynamicTerm {
    double value = 0.0;
    double d_log_s_p = 0.0;
    double d_log_s_r = 0.0;
};

DynamicTerm dynamic_term(const EffectivenessFlags& flags, const AlignmentScores& scores);

/// Mean dynamic term over sequences whose flags are set; 0 when there are none.
double dynamic_loss(std::span<const EffectivenessFlags> flags, std::span<const AlignmentScores> scores);

// ---- risk level head ----------------------------------------------------

using LevelVector = std::array<double, kNumLevels>;

struct RiskHeadTrace {
    Eigen::VectorXd hidden_pre;
    Eigen::VectorXd hidden;  // ReLU then dropout
    Eigen::VectorXd mask;
    Eigen::VectorXd logits;
};

Eigen::VectorXd risk_head(const Eigen::VectorXd& u, const DecoderParams& params);
RiskHeadTrace risk_head_forward(const Eigen::VectorXd& u, const DecoderParams& params, double dropout = 0.0,
                                std::mt19937_64* rng = nullptr);
/// Returns dL/du.
Eigen::VectorXd risk_head_backward(const Eigen::VectorXd& u, const RiskHeadTrace& trace,
                                   const Eigen::VectorXd& d_logits, const DecoderParams& params,
                                   DecoderParams& grad);

/// Soft ordinal targets: softmax(-alpha * |k_true - k|).
LevelVector sord_targets(RiskLevel k_true, double alpha);

/// Entropy with 0 log 0 = 0.
double entropy(const LevelVector& p);

struct RiskLoss {
    double value = 0.0;
    Eigen::VectorXd d_logits;
};

/// Cross-entropy of softmax(logits) against sord_targets(k_true, alpha),
/// with log-probabilities clamped at log(1e-7).
RiskLoss risk_loss(const Eigen::VectorXd& logits, RiskLevel k_true, double alpha);

/// argmax with ties going to the lower level; `tied` reports whether a tie occurred.
RiskLevel predict_level(const LevelVector& probs, bool* tied = nullptr);

}  // namespace seqrisk
