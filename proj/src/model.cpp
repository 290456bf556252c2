#include "seqrisk/model.hpp"

#include <cmath>
#include <stdexcept>

namespace seqrisk {

bool Ablations::enabled(Task task) const {
    switch (task) {
        case Task::RiskFactor: return !disable_rf;
        case Task::Protective: return !disable_pf;
        case Task::Dynamic: return !disable_df;
        case Task::RiskLevel: return true;
    }
    return true;
}

double total_loss(const LossBundle& losses, const UncertaintyWeights& weights, const Ablations& ablations) {
    const auto l = losses.as_array();
    double total = 0.0;
    for (int k = 0; k < kNumTasks; ++k) {
        if (!ablations.enabled(static_cast<Task>(k))) continue;
        const double s = weights.log_sigma[k];
        total += 0.5 * std::exp(-2.0 * s) * l[k] + s;
    }
    return total;
}

ModelParameters ModelParameters::initialize(const ModelDims& dims, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    ModelParameters p;
    p.dims = dims;
    p.encoder = EncoderParams::random(dims.embedding, dims.hidden, dims.attention, rng);
    p.decoder = DecoderParams::random(dims.embedding, dims.factor_hidden, dims.pooled(), dims.risk_hidden, rng);
    return p;
}

ModelParameters ModelParameters::zeros(const ModelDims& dims) {
    ModelParameters p;
    p.dims = dims;
    p.encoder = EncoderParams::zeros(dims.embedding, dims.hidden, dims.attention);
    p.decoder = DecoderParams::zeros(dims.embedding, dims.factor_hidden, dims.pooled(), dims.risk_hidden);
    return p;
}

namespace {

template <typename Derived>
TensorView view(std::string name, Eigen::PlainObjectBase<Derived>& m) {
    return {std::move(name), std::span<double>(m.data(), static_cast<std::size_t>(m.size())), m.rows(), m.cols()};
}

void add_dense(std::vector<TensorView>& out, const std::string& prefix, DenseLayer& layer) {
    out.push_back(view(prefix + ".W", layer.W));
    out.push_back(view(prefix + ".b", layer.b));
}

void add_lstm(std::vector<TensorView>& out, const std::string& prefix, LstmParams& p) {
    out.push_back(view(prefix + ".W", p.W));
    out.push_back(view(prefix + ".U", p.U));
    out.push_back(view(prefix + ".b", p.b));
}

}  // namespace

std::vector<TensorView> tensors(ModelParameters& p) {
    std::vector<TensorView> out;
    add_lstm(out, "encoder.lstm_forward", p.encoder.forward);
    add_lstm(out, "encoder.lstm_backward", p.encoder.backward);
    out.push_back({"encoder.theta", std::span<double>(&p.encoder.theta, 1), 1, 1});
    out.push_back({"encoder.mu", std::span<double>(&p.encoder.mu, 1), 1, 1});
    out.push_back(view("encoder.attn_W", p.encoder.attn_W));
    out.push_back(view("encoder.attn_b", p.encoder.attn_b));
    out.push_back(view("encoder.attn_v", p.encoder.attn_v));
    add_dense(out, "decoder.rf_hidden", p.decoder.rf_hidden);
    add_dense(out, "decoder.rf_embed", p.decoder.rf_embed);
    add_dense(out, "decoder.rf_out", p.decoder.rf_out);
    add_dense(out, "decoder.pf_hidden", p.decoder.pf_hidden);
    add_dense(out, "decoder.pf_embed", p.decoder.pf_embed);
    add_dense(out, "decoder.pf_out", p.decoder.pf_out);
    add_dense(out, "decoder.risk_hidden", p.decoder.risk_hidden);
    add_dense(out, "decoder.risk_out", p.decoder.risk_out);
    out.push_back({"uncertainty.log_sigma", std::span<double>(p.uncertainty.log_sigma), kNumTasks, 1});
    return out;
}

std::size_t parameter_count(const ModelParameters& params) {
    std::size_t n = 0;
    for (const auto& t : tensors(const_cast<ModelParameters&>(params))) n += t.values.size();
    return n;
}

bool all_finite(const ModelParameters& params) {
    for (const auto& t : tensors(const_cast<ModelParameters&>(params))) {
        for (double v : t.values) {
            if (!std::isfinite(v)) return false;
        }
    }
    return true;
}

WindowExample make_example(const LabeledWindow& window, const EmbeddingProvider& embedder, std::size_t window_id) {
    const auto l = static_cast<Eigen::Index>(window.observed.size());
    if (l < 1) throw std::invalid_argument("window has no observed posts");
    WindowExample ex;
    ex.window_id = window_id;
    ex.user_id = window.user_id;
    ex.embeddings.resize(l, embedder.dim());
    ex.rf_labels = Eigen::MatrixXd::Zero(kNumRiskFactors, l);
    ex.pf_labels = Eigen::MatrixXd::Zero(kNumProtectiveFactors, l);
    for (Eigen::Index t = 0; t < l; ++t) {
        const auto& post = window.observed[static_cast<std::size_t>(t)];
        ex.embeddings.row(t) = embedder.embed(post).transpose();
        for (const auto& code : post.risk_factors) ex.rf_labels(*FactorCatalog::risk_index(code), t) = 1.0;
        for (const auto& code : post.protective_factors) {
            ex.pf_labels(*FactorCatalog::protective_index(code), t) = 1.0;
        }
    }
    ex.delta_days = window.delta_days;
    ex.last_level = window.last_observed_level();
    ex.target = window.target_level;
    return ex;
}

std::vector<WindowExample> make_examples(const std::vector<LabeledWindow>& windows, const EmbeddingProvider& embedder) {
    std::vector<WindowExample> out;
    out.reserve(windows.size());
    for (std::size_t i = 0; i < windows.size(); ++i) out.push_back(make_example(windows[i], embedder, i));
    return out;
}

namespace {

struct WindowTrace {
    Eigen::MatrixXd X;  // d_e x l
    BiLstmTrace lstm;
    SequenceEncoding enc;
    FactorHeadTrace rf;
    FactorHeadTrace pf;
    RiskHeadTrace risk;
    RiskLoss risk_loss;
};

Eigen::MatrixXd sigmoid_matrix(const Eigen::MatrixXd& x) {
    return x.unaryExpr([](double v) { return sigmoid(v); });
}

}  // namespace

BatchResult evaluate_batch(const ModelParameters& params, std::span<const WindowExample* const> batch,
                           const ForwardOptions& options, ModelParameters* grad, std::mt19937_64* dropout_rng) {
    if (batch.empty()) throw std::invalid_argument("empty batch");
    const auto B = static_cast<double>(batch.size());
    const auto& ab = options.ablations;
    const double dropout = dropout_rng ? options.dropout : 0.0;

    BatchResult result;
    result.outputs.reserve(batch.size());
    std::vector<WindowTrace> traces;
    if (grad) traces.reserve(batch.size());

    double sum_sr = 0.0, sum_rf = 0.0, sum_pf = 0.0, sum_df = 0.0;
    std::size_t n_effective = 0;

    for (const WindowExample* ex : batch) {
        WindowTrace tr;
        tr.X = ex->embeddings.transpose();
        tr.lstm = bilstm_forward(ex->embeddings, params.encoder);
        tr.enc = temporal_attention(tr.lstm.H, ex->delta_days, params.encoder, options.pooling);
        const auto& d = params.decoder;
        tr.rf = factor_head_forward(tr.X, d.rf_hidden, d.rf_embed, d.rf_out, dropout, dropout_rng);
        tr.pf = factor_head_forward(tr.X, d.pf_hidden, d.pf_embed, d.pf_out, dropout, dropout_rng);
        tr.risk = risk_head_forward(tr.enc.pooled, d, dropout, dropout_rng);
        tr.risk_loss = risk_loss(tr.risk.logits, ex->target, options.alpha);

        const auto fl = factor_losses(tr.rf.logits, tr.pf.logits, ex->rf_labels, ex->pf_labels);
        sum_rf += fl.rf;
        sum_pf += fl.pf;
        sum_sr += tr.risk_loss.value;

        WindowOutput out;
        out.attention = tr.enc.attention;
        out.gates = tr.enc.gates;
        out.alignment = alignment(tr.enc.pooled, tr.pf.embed, tr.rf.embed, options.tau);
        out.flags = effectiveness(ex->last_level, ex->target);
        if (out.flags.any()) {
            sum_df += dynamic_term(out.flags, out.alignment).value;
            ++n_effective;
        }
        const Eigen::VectorXd probs = softmax(tr.risk.logits);
        for (int k = 0; k < kNumLevels; ++k) out.risk_probs[k] = probs[k];
        out.predicted = predict_level(out.risk_probs, &out.tied);
        out.rf_probs = sigmoid_matrix(tr.rf.logits);
        out.pf_probs = sigmoid_matrix(tr.pf.logits);
        result.outputs.push_back(std::move(out));
        if (grad) traces.push_back(std::move(tr));
    }

    result.losses.sr = sum_sr / B;
    result.losses.rf = sum_rf / B;
    result.losses.pf = sum_pf / B;
    result.losses.df = n_effective ? sum_df / static_cast<double>(n_effective) : 0.0;
    result.total = total_loss(result.losses, params.uncertainty, ab);

    if (!grad) return result;

    const auto losses = result.losses.as_array();
    std::array<double, kNumTasks> weight{};
    for (int k = 0; k < kNumTasks; ++k) {
        if (!ab.enabled(static_cast<Task>(k))) continue;
        const double inv_var = std::exp(-2.0 * params.uncertainty.log_sigma[k]);
        weight[k] = 0.5 * inv_var;
        grad->uncertainty.log_sigma[k] += 1.0 - losses[k] * inv_var;
    }
    const double w_sr = weight[static_cast<int>(Task::RiskLevel)];
    const double w_pf = weight[static_cast<int>(Task::Protective)];
    const double w_rf = weight[static_cast<int>(Task::RiskFactor)];
    const double w_df = weight[static_cast<int>(Task::Dynamic)];

    for (std::size_t i = 0; i < batch.size(); ++i) {
        const WindowExample& ex = *batch[i];
        const WindowTrace& tr = traces[i];
        const WindowOutput& out = result.outputs[i];
        const auto l = static_cast<double>(ex.embeddings.rows());
        const Eigen::VectorXd& u = tr.enc.pooled;

        Eigen::VectorXd d_u = Eigen::VectorXd::Zero(u.size());
        Eigen::MatrixXd d_plus = Eigen::MatrixXd::Zero(tr.pf.embed.rows(), tr.pf.embed.cols());
        Eigen::MatrixXd d_minus = Eigen::MatrixXd::Zero(tr.rf.embed.rows(), tr.rf.embed.cols());

        if (w_df > 0.0 && out.flags.any()) {
            const auto term = dynamic_term(out.flags, out.alignment);
            const double scale = w_df / static_cast<double>(n_effective);
            auto ag = alignment_backward(u, tr.pf.embed, tr.rf.embed, options.tau, out.alignment,
                                         scale * term.d_log_s_p, scale * term.d_log_s_r);
            d_u += ag.d_u;
            d_plus = std::move(ag.d_plus);
            d_minus = std::move(ag.d_minus);
        }

        d_u += risk_head_backward(u, tr.risk, (w_sr / B) * tr.risk_loss.d_logits, params.decoder, grad->decoder);

        const Eigen::MatrixXd d_rf_logits = (w_rf / (B * l)) * (out.rf_probs - ex.rf_labels);
        const Eigen::MatrixXd d_pf_logits = (w_pf / (B * l)) * (out.pf_probs - ex.pf_labels);
        const auto& d = params.decoder;
        auto& g = grad->decoder;
        factor_head_backward(tr.X, tr.rf, d_minus, d_rf_logits, d.rf_embed, d.rf_out, g.rf_hidden, g.rf_embed,
                             g.rf_out);
        factor_head_backward(tr.X, tr.pf, d_plus, d_pf_logits, d.pf_embed, d.pf_out, g.pf_hidden, g.pf_embed,
                             g.pf_out);

        const Eigen::MatrixXd dH = temporal_attention_backward(tr.lstm.H, ex.delta_days, tr.enc, d_u, params.encoder,
                                                               grad->encoder, options.pooling);
        bilstm_backward(ex.embeddings, tr.lstm, dH, params.encoder, grad->encoder);
    }
    return result;
}

BatchResult evaluate_batch(const ModelParameters& params, const std::vector<WindowExample>& examples,
                           const ForwardOptions& options) {
    std::vector<const WindowExample*> ptrs;
    ptrs.reserve(examples.size());
    for (const auto& ex : examples) ptrs.push_back(&ex);
    return evaluate_batch(params, ptrs, options);
}

}  // namespace seqrisk
