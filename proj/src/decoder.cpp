#include "seqrisk/decoder.hpp"

#include <cmath>
#include <stdexcept>

#include "seqrisk/encoder.hpp"

namespace seqrisk {

namespace {

const double kLogEpsilon = std::log(kLogClampEpsilon);

Eigen::MatrixXd dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, std::mt19937_64& rng) {
    std::bernoulli_distribution keep(1.0 - rate);
    const double scale = 1.0 / (1.0 - rate);
    Eigen::MatrixXd mask(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) mask(i, j) = keep(rng) ? scale : 0.0;
    }
    return mask;
}

double log_sum_exp(const Eigen::VectorXd& x) {
    const double m = x.maxCoeff();
    return m + std::log((x.array() - m).exp().sum());
}

}  // namespace

DenseLayer DenseLayer::zeros(int in, int out) {
    if (in < 1 || out < 1) throw std::invalid_argument("layer dims must be >= 1");
    return {Eigen::MatrixXd::Zero(out, in), Eigen::VectorXd::Zero(out)};
}

DenseLayer DenseLayer::random(int in, int out, std::mt19937_64& rng) {
    if (in < 1 || out < 1) throw std::invalid_argument("layer dims must be >= 1");
    std::uniform_real_distribution<double> dist(-1.0 / std::sqrt(in), 1.0 / std::sqrt(in));
    DenseLayer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd(out)};
    for (Eigen::Index j = 0; j < in; ++j) {
        for (Eigen::Index i = 0; i < out; ++i) layer.W(i, j) = dist(rng);
    }
    for (Eigen::Index i = 0; i < out; ++i) layer.b[i] = dist(rng);
    return layer;
}

DecoderParams DecoderParams::zeros(int input_dim, int factor_hidden, int pooled_dim, int risk_hidden) {
    const int M = static_cast<int>(kNumRiskFactors);
    const int K = static_cast<int>(kNumProtectiveFactors);
    return {DenseLayer::zeros(input_dim, factor_hidden), DenseLayer::zeros(factor_hidden, pooled_dim),
            DenseLayer::zeros(pooled_dim, M),            DenseLayer::zeros(input_dim, factor_hidden),
            DenseLayer::zeros(factor_hidden, pooled_dim), DenseLayer::zeros(pooled_dim, K),
            DenseLayer::zeros(pooled_dim, risk_hidden),   DenseLayer::zeros(risk_hidden, kNumLevels)};
}

DecoderParams DecoderParams::random(int input_dim, int factor_hidden, int pooled_dim, int risk_hidden,
                                    std::mt19937_64& rng) {
    const int M = static_cast<int>(kNumRiskFactors);
    const int K = static_cast<int>(kNumProtectiveFactors);
    DecoderParams p;
    p.rf_hidden = DenseLayer::random(input_dim, factor_hidden, rng);
    p.rf_embed = DenseLayer::random(factor_hidden, pooled_dim, rng);
    p.rf_out = DenseLayer::random(pooled_dim, M, rng);
    p.pf_hidden = DenseLayer::random(input_dim, factor_hidden, rng);
    p.pf_embed = DenseLayer::random(factor_hidden, pooled_dim, rng);
    p.pf_out = DenseLayer::random(pooled_dim, K, rng);
    p.risk_hidden = DenseLayer::random(pooled_dim, risk_hidden, rng);
    p.risk_out = DenseLayer::random(risk_hidden, kNumLevels, rng);
    return p;
}

FactorHeadTrace factor_head_forward(const Eigen::MatrixXd& X, const DenseLayer& hidden, const DenseLayer& embed,
                                    const DenseLayer& out, double dropout, std::mt19937_64* rng) {
    if (X.rows() != hidden.in()) throw std::invalid_argument("factor head input dimension mismatch");
    FactorHeadTrace t;
    t.hidden_pre = (hidden.W * X).colwise() + hidden.b;
    t.hidden = t.hidden_pre.cwiseMax(0.0);
    if (dropout > 0.0 && rng) {
        t.mask = dropout_mask(t.hidden.rows(), t.hidden.cols(), dropout, *rng);
        t.hidden.array() *= t.mask.array();
    }
    t.embed_pre = (embed.W * t.hidden).colwise() + embed.b;
    t.embed = t.embed_pre.cwiseMax(0.0);
    t.logits = (out.W * t.embed).colwise() + out.b;
    return t;
}

void factor_head_backward(const Eigen::MatrixXd& X, const FactorHeadTrace& trace, const Eigen::MatrixXd& d_embed,
                          const Eigen::MatrixXd& d_logits, const DenseLayer& embed, const DenseLayer& out,
                          DenseLayer& g_hidden, DenseLayer& g_embed, DenseLayer& g_out) {
    g_out.W.noalias() += d_logits * trace.embed.transpose();
    g_out.b += d_logits.rowwise().sum();
    Eigen::MatrixXd d_e = d_embed;
    d_e.noalias() += out.W.transpose() * d_logits;
    const Eigen::MatrixXd d_embed_pre = (d_e.array() * (trace.embed_pre.array() > 0.0).cast<double>()).matrix();
    g_embed.W.noalias() += d_embed_pre * trace.hidden.transpose();
    g_embed.b += d_embed_pre.rowwise().sum();
    Eigen::ArrayXXd d_hidden = (embed.W.transpose() * d_embed_pre).array();
    if (trace.mask.size() > 0) d_hidden *= trace.mask.array();
    d_hidden *= (trace.hidden_pre.array() > 0.0).cast<double>();
    g_hidden.W.noalias() += d_hidden.matrix() * X.transpose();
    g_hidden.b += d_hidden.matrix().rowwise().sum();
}

FactorPrediction factor_heads(const Eigen::VectorXd& e, const DecoderParams& params) {
    const auto rf = factor_head_forward(e, params.rf_hidden, params.rf_embed, params.rf_out);
    const auto pf = factor_head_forward(e, params.pf_hidden, params.pf_embed, params.pf_out);
    return {rf.embed.col(0), pf.embed.col(0), rf.logits.col(0), pf.logits.col(0)};
}

double bce_with_logit(double logit, double label) {
    // -[y log s(x) + (1-y) log(1-s(x))] = max(x,0) - x y + log(1 + exp(-|x|))
    return std::max(logit, 0.0) - logit * label + std::log1p(std::exp(-std::abs(logit)));
}

double multilabel_bce(const Eigen::VectorXd& logits, const Eigen::VectorXd& labels) {
    if (logits.size() != labels.size()) throw std::invalid_argument("logit/label size mismatch");
    double sum = 0.0;
    for (Eigen::Index j = 0; j < logits.size(); ++j) sum += bce_with_logit(logits[j], labels[j]);
    return sum;
}

FactorLosses factor_losses(const Eigen::MatrixXd& rf_logits, const Eigen::MatrixXd& pf_logits,
                           const Eigen::MatrixXd& y_rf, const Eigen::MatrixXd& y_pf) {
    if (rf_logits.cols() != pf_logits.cols() || rf_logits.cols() < 1) {
        throw std::invalid_argument("factor logits must cover the same posts");
    }
    FactorLosses out;
    const auto l = rf_logits.cols();
    for (Eigen::Index t = 0; t < l; ++t) {
        out.rf += multilabel_bce(rf_logits.col(t), y_rf.col(t));
        out.pf += multilabel_bce(pf_logits.col(t), y_pf.col(t));
    }
    out.rf /= static_cast<double>(l);
    out.pf /= static_cast<double>(l);
    return out;
}

EffectivenessFlags effectiveness(RiskLevel last_observed, RiskLevel target) {
    const int delta = level_index(target) - level_index(last_observed);
    return {delta < 0, delta > 0};
}

double cosine_similarity(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    const double nx = x.norm();
    const double ny = y.norm();
    if (nx == 0.0 || ny == 0.0) return 0.0;
    return x.dot(y) / (nx * ny);
}

AlignmentScores alignment(const Eigen::VectorXd& u, const Eigen::MatrixXd& e_plus, const Eigen::MatrixXd& e_minus,
                          double tau) {
    if (!(tau > 0.0)) throw std::invalid_argument("alignment temperature must be positive");
    if (e_plus.cols() != e_minus.cols() || e_plus.rows() != u.size() || e_minus.rows() != u.size()) {
        throw std::invalid_argument("alignment dimension mismatch");
    }
    const auto l = e_plus.cols();
    AlignmentScores s;
    s.sim_plus.resize(l);
    s.sim_minus.resize(l);
    for (Eigen::Index t = 0; t < l; ++t) {
        s.sim_plus[t] = cosine_similarity(u, e_plus.col(t));
        s.sim_minus[t] = cosine_similarity(u, e_minus.col(t));
    }
    const double a = log_sum_exp(s.sim_plus / tau);
    const double b = log_sum_exp(s.sim_minus / tau);
    const double m = std::max(a, b);
    const double norm = m + std::log(std::exp(a - m) + std::exp(b - m));
    s.log_s_p = a - norm;
    s.log_s_r = b - norm;
    s.s_p = std::exp(s.log_s_p);
    s.s_r = std::exp(s.log_s_r);
    return s;
}

namespace {

/// Adds d(cos(u, e))/du and /de, scaled by g, into du and de.
void cosine_backward(const Eigen::VectorXd& u, const Eigen::Ref<const Eigen::VectorXd>& e, double cos, double g,
                     Eigen::VectorXd& du, Eigen::Ref<Eigen::VectorXd> de) {
    const double nu = u.norm();
    const double ne = e.norm();
    if (nu == 0.0 || ne == 0.0 || g == 0.0) return;
    du += g * (e / (nu * ne) - cos * u / (nu * nu));
    de += g * (u / (nu * ne) - cos * e / (ne * ne));
}

}  // namespace

AlignmentGrad alignment_backward(const Eigen::VectorXd& u, const Eigen::MatrixXd& e_plus,
                                 const Eigen::MatrixXd& e_minus, double tau, const AlignmentScores& scores,
                                 double d_log_s_p, double d_log_s_r) {
    AlignmentGrad g{Eigen::VectorXd::Zero(u.size()), Eigen::MatrixXd::Zero(e_plus.rows(), e_plus.cols()),
                    Eigen::MatrixXd::Zero(e_minus.rows(), e_minus.cols())};
    // log S_p = A - lse(A, B), log S_r = B - lse(A, B)
    const double d_a = d_log_s_p * scores.s_r - d_log_s_r * scores.s_p;
    const double d_b = -d_log_s_p * scores.s_r + d_log_s_r * scores.s_p;
    const Eigen::VectorXd w_plus = softmax(scores.sim_plus / tau);
    const Eigen::VectorXd w_minus = softmax(scores.sim_minus / tau);
    for (Eigen::Index t = 0; t < e_plus.cols(); ++t) {
        cosine_backward(u, e_plus.col(t), scores.sim_plus[t], d_a * w_plus[t] / tau, g.d_u, g.d_plus.col(t));
        cosine_backward(u, e_minus.col(t), scores.sim_minus[t], d_b * w_minus[t] / tau, g.d_u, g.d_minus.col(t));
    }
    return g;
}

DynamicTerm dynamic_term(const EffectivenessFlags& flags, const AlignmentScores& scores) {
    // log(1 - S_p) = log S_r, so the four BCE terms collapse onto two logs.
    const double ep = flags.protective ? 1.0 : 0.0;
    const double er = flags.risk ? 1.0 : 0.0;
    const double c_p = 0.5 * (ep + 1.0 - er);
    const double c_r = 0.5 * (1.0 - ep + er);
    const bool clamp_p = scores.log_s_p < kLogEpsilon;
    const bool clamp_r = scores.log_s_r < kLogEpsilon;
    const double lp = clamp_p ? kLogEpsilon : scores.log_s_p;
    const double lr = clamp_r ? kLogEpsilon : scores.log_s_r;
    DynamicTerm term;
    term.value = -c_p * lp - c_r * lr;
    term.d_log_s_p = clamp_p ? 0.0 : -c_p;
    term.d_log_s_r = clamp_r ? 0.0 : -c_r;
    return term;
}

double dynamic_loss(std::span<const EffectivenessFlags> flags, std::span<const AlignmentScores> scores) {
    if (flags.size() != scores.size()) throw std::invalid_argument("flags/scores size mismatch");
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < flags.size(); ++i) {
        if (!flags[i].any()) continue;
        sum += dynamic_term(flags[i], scores[i]).value;
        ++count;
    }
    return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

RiskHeadTrace risk_head_forward(const Eigen::VectorXd& u, const DecoderParams& params, double dropout,
                                std::mt19937_64* rng) {
    if (u.size() != params.risk_hidden.in()) throw std::invalid_argument("risk head input dimension mismatch");
    RiskHeadTrace t;
    t.hidden_pre = params.risk_hidden.W * u + params.risk_hidden.b;
    t.hidden = t.hidden_pre.cwiseMax(0.0);
    if (dropout > 0.0 && rng) {
        t.mask = dropout_mask(t.hidden.size(), 1, dropout, *rng);
        t.hidden.array() *= t.mask.array();
    }
    t.logits = params.risk_out.W * t.hidden + params.risk_out.b;
    return t;
}

Eigen::VectorXd risk_head(const Eigen::VectorXd& u, const DecoderParams& params) {
    return risk_head_forward(u, params).logits;
}

Eigen::VectorXd risk_head_backward(const Eigen::VectorXd& u, const RiskHeadTrace& trace,
                                   const Eigen::VectorXd& d_logits, const DecoderParams& params,
                                   DecoderParams& grad) {
    grad.risk_out.W.noalias() += d_logits * trace.hidden.transpose();
    grad.risk_out.b += d_logits;
    Eigen::ArrayXd d_hidden = (params.risk_out.W.transpose() * d_logits).array();
    if (trace.mask.size() > 0) d_hidden *= trace.mask.array();
    d_hidden *= (trace.hidden_pre.array() > 0.0).cast<double>();
    grad.risk_hidden.W.noalias() += d_hidden.matrix() * u.transpose();
    grad.risk_hidden.b += d_hidden.matrix();
    return params.risk_hidden.W.transpose() * d_hidden.matrix();
}

LevelVector sord_targets(RiskLevel k_true, double alpha) {
    if (!(alpha >= 0.0)) throw std::invalid_argument("ordinal penalty alpha must be >= 0");
    LevelVector p{};
    double sum = 0.0;
    for (int k = 0; k < kNumLevels; ++k) {
        p[k] = std::exp(-alpha * std::abs(level_index(k_true) - k));
        sum += p[k];
    }
    for (auto& v : p) v /= sum;
    return p;
}

double entropy(const LevelVector& p) {
    double h = 0.0;
    for (double v : p) {
        if (v > 0.0) h -= v * std::log(v);
    }
    return h;
}

RiskLoss risk_loss(const Eigen::VectorXd& logits, RiskLevel k_true, double alpha) {
    if (logits.size() != kNumLevels) throw std::invalid_argument("risk logits must have 4 entries");
    const auto target = sord_targets(k_true, alpha);
    const double lse = log_sum_exp(logits);
    RiskLoss out;
    out.d_logits = Eigen::VectorXd::Zero(kNumLevels);
    double unclamped_mass = 0.0;
    for (int j = 0; j < kNumLevels; ++j) {
        const double log_p = logits[j] - lse;
        if (log_p < kLogEpsilon) {
            out.value -= target[j] * kLogEpsilon;
        } else {
            out.value -= target[j] * log_p;
            unclamped_mass += target[j];
            out.d_logits[j] -= target[j];
        }
    }
    for (int k = 0; k < kNumLevels; ++k) out.d_logits[k] += unclamped_mass * std::exp(logits[k] - lse);
    return out;
}

RiskLevel predict_level(const LevelVector& probs, bool* tied) {
    int best = 0;
    bool tie = false;
    for (int k = 1; k < kNumLevels; ++k) {
        if (probs[k] > probs[best]) {
            best = k;
            tie = false;
        } else if (probs[k] == probs[best]) {
            tie = true;
        }
    }
    if (tied) *tied = tie;
    return level_from_index(best);
}

}  // namespace seqrisk
