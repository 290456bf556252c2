#include "seqrisk/encoder.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace seqrisk {

namespace {

Eigen::MatrixXd uniform_matrix(Eigen::Index rows, Eigen::Index cols, double bound, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
    }
    return m;
}

LstmParams zero_lstm(int input_dim, int hidden_dim) {
    return {Eigen::MatrixXd::Zero(4 * hidden_dim, input_dim), Eigen::MatrixXd::Zero(4 * hidden_dim, hidden_dim),
            Eigen::VectorXd::Zero(4 * hidden_dim)};
}

LstmParams random_lstm(int input_dim, int hidden_dim, std::mt19937_64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
    LstmParams p;
    p.W = uniform_matrix(4 * hidden_dim, input_dim, bound, rng);
    p.U = uniform_matrix(4 * hidden_dim, hidden_dim, bound, rng);
    p.b = uniform_matrix(4 * hidden_dim, 1, bound, rng);
    return p;
}

Eigen::ArrayXd sigmoid_array(const Eigen::ArrayXd& x) { return 1.0 / (1.0 + (-x).exp()); }

LstmTrace run_lstm(const Eigen::MatrixXd& E, const LstmParams& p, bool reverse) {
    const int h = p.hidden();
    const auto l = E.rows();
    LstmTrace trace{Eigen::MatrixXd(4 * h, l), Eigen::MatrixXd(h, l), Eigen::MatrixXd(h, l)};
    Eigen::VectorXd h_prev = Eigen::VectorXd::Zero(h);
    Eigen::VectorXd c_prev = Eigen::VectorXd::Zero(h);
    Eigen::VectorXd z(4 * h);
    for (Eigen::Index s = 0; s < l; ++s) {
        const Eigen::Index t = reverse ? l - 1 - s : s;
        z.noalias() = p.W * E.row(t).transpose();
        z.noalias() += p.U * h_prev;
        z += p.b;
        Eigen::ArrayXd i = sigmoid_array(z.segment(0, h).array());
        Eigen::ArrayXd f = sigmoid_array(z.segment(h, h).array());
        Eigen::ArrayXd g = z.segment(2 * h, h).array().tanh();
        Eigen::ArrayXd o = sigmoid_array(z.segment(3 * h, h).array());
        Eigen::ArrayXd c = f * c_prev.array() + i * g;
        trace.gates.col(t) << i.matrix(), f.matrix(), g.matrix(), o.matrix();
        trace.cell.col(t) = c.matrix();
        trace.hidden.col(t) = (o * c.tanh()).matrix();
        h_prev = trace.hidden.col(t);
        c_prev = trace.cell.col(t);
    }
    return trace;
}

void lstm_backward(const Eigen::MatrixXd& E, const LstmTrace& trace, const Eigen::MatrixXd& dh_out,
                   const LstmParams& p, LstmParams& grad, bool reverse) {
    const int h = p.hidden();
    const auto l = E.rows();
    Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(h);
    Eigen::ArrayXd dc_next = Eigen::ArrayXd::Zero(h);
    Eigen::VectorXd dz(4 * h);
    Eigen::VectorXd h_prev(h);
    Eigen::ArrayXd c_prev(h);
    for (Eigen::Index s = l - 1; s >= 0; --s) {
        const Eigen::Index t = reverse ? l - 1 - s : s;
        if (s == 0) {
            h_prev.setZero();
            c_prev.setZero();
        } else {
            const Eigen::Index prev = reverse ? t + 1 : t - 1;
            h_prev = trace.hidden.col(prev);
            c_prev = trace.cell.col(prev).array();
        }

        const Eigen::ArrayXd i = trace.gates.col(t).segment(0, h).array();
        const Eigen::ArrayXd f = trace.gates.col(t).segment(h, h).array();
        const Eigen::ArrayXd g = trace.gates.col(t).segment(2 * h, h).array();
        const Eigen::ArrayXd o = trace.gates.col(t).segment(3 * h, h).array();
        const Eigen::ArrayXd tc = trace.cell.col(t).array().tanh();

        const Eigen::ArrayXd dh = dh_out.col(t).array() + dh_next.array();
        const Eigen::ArrayXd dc = dc_next + dh * o * (1.0 - tc * tc);
        dz.segment(0, h) = (dc * g * i * (1.0 - i)).matrix();
        dz.segment(h, h) = (dc * c_prev * f * (1.0 - f)).matrix();
        dz.segment(2 * h, h) = (dc * i * (1.0 - g * g)).matrix();
        dz.segment(3 * h, h) = (dh * tc * o * (1.0 - o)).matrix();
        dc_next = dc * f;

        grad.W.noalias() += dz * E.row(t);
        grad.U.noalias() += dz * h_prev.transpose();
        grad.b += dz;
        dh_next.noalias() = p.U.transpose() * dz;
    }
}

}  // namespace

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Eigen::VectorXd softmax(const Eigen::VectorXd& z) {
    Eigen::VectorXd e = (z.array() - z.maxCoeff()).exp().matrix();
    return e / e.sum();
}

EncoderParams EncoderParams::zeros(int input_dim, int hidden_dim, int attention_dim) {
    if (input_dim < 1 || hidden_dim < 1 || attention_dim < 1) throw std::invalid_argument("encoder dims must be >= 1");
    EncoderParams p;
    p.forward = zero_lstm(input_dim, hidden_dim);
    p.backward = zero_lstm(input_dim, hidden_dim);
    p.theta = 0.0;
    p.mu = 0.0;
    p.attn_W = Eigen::MatrixXd::Zero(attention_dim, 2 * hidden_dim);
    p.attn_b = Eigen::VectorXd::Zero(attention_dim);
    p.attn_v = Eigen::VectorXd::Zero(attention_dim);
    return p;
}

EncoderParams EncoderParams::random(int input_dim, int hidden_dim, int attention_dim, std::mt19937_64& rng) {
    if (input_dim < 1 || hidden_dim < 1 || attention_dim < 1) throw std::invalid_argument("encoder dims must be >= 1");
    EncoderParams p;
    p.forward = random_lstm(input_dim, hidden_dim, rng);
    p.backward = random_lstm(input_dim, hidden_dim, rng);
    p.theta = 1.0;
    p.mu = 0.1;
    const double a_bound = 1.0 / std::sqrt(2.0 * hidden_dim);
    p.attn_W = uniform_matrix(attention_dim, 2 * hidden_dim, a_bound, rng);
    p.attn_b = uniform_matrix(attention_dim, 1, a_bound, rng);
    p.attn_v = uniform_matrix(attention_dim, 1, 1.0 / std::sqrt(static_cast<double>(attention_dim)), rng);
    return p;
}

BiLstmTrace bilstm_forward(const Eigen::MatrixXd& E, const EncoderParams& params) {
    if (E.rows() < 1) throw std::invalid_argument("sequence must contain at least one post");
    if (E.cols() != params.forward.input() || E.cols() != params.backward.input()) {
        throw std::invalid_argument("embedding dimension " + std::to_string(E.cols()) +
                                    " does not match encoder input " + std::to_string(params.forward.input()));
    }
    BiLstmTrace trace;
    trace.forward = run_lstm(E, params.forward, false);
    trace.backward = run_lstm(E, params.backward, true);
    const int h = params.hidden_dim();
    trace.H.resize(E.rows(), 2 * h);
    trace.H.leftCols(h) = trace.forward.hidden.transpose();
    trace.H.rightCols(h) = trace.backward.hidden.transpose();
    return trace;
}

Eigen::MatrixXd bilstm_encode(const Eigen::MatrixXd& E, const EncoderParams& params) {
    return bilstm_forward(E, params).H;
}

void bilstm_backward(const Eigen::MatrixXd& E, const BiLstmTrace& trace, const Eigen::MatrixXd& dH,
                     const EncoderParams& params, EncoderParams& grad) {
    const int h = params.hidden_dim();
    lstm_backward(E, trace.forward, dH.leftCols(h).transpose(), params.forward, grad.forward, false);
    lstm_backward(E, trace.backward, dH.rightCols(h).transpose(), params.backward, grad.backward, true);
}

SequenceEncoding temporal_attention(const Eigen::MatrixXd& H, std::span<const double> delta_days,
                                    const EncoderParams& params, PoolingMode pooling) {
    const auto l = H.rows();
    if (static_cast<Eigen::Index>(delta_days.size()) != l) {
        throw std::invalid_argument("delta_days length does not match sequence length");
    }
    SequenceEncoding enc;
    enc.gates.resize(l);
    for (Eigen::Index t = 0; t < l; ++t) enc.gates[t] = sigmoid(params.theta - params.mu * delta_days[t]);
    const Eigen::MatrixXd decayed = enc.gates.asDiagonal() * H;  // l x 2h
    enc.attn_hidden = ((params.attn_W * decayed.transpose()).colwise() + params.attn_b).array().tanh().matrix();
    enc.energies = enc.attn_hidden.transpose() * params.attn_v;
    enc.attention = softmax(enc.energies);
    enc.pooled = (pooling == PoolingMode::Raw ? H : decayed).transpose() * enc.attention;
    return enc;
}

Eigen::MatrixXd temporal_attention_backward(const Eigen::MatrixXd& H, std::span<const double> delta_days,
                                            const SequenceEncoding& enc, const Eigen::VectorXd& d_pooled,
                                            const EncoderParams& params, EncoderParams& grad,
                                            PoolingMode pooling) {
    const Eigen::MatrixXd decayed = enc.gates.asDiagonal() * H;
    const Eigen::MatrixXd& pooled_rows = pooling == PoolingMode::Raw ? H : decayed;

    Eigen::MatrixXd dH = Eigen::MatrixXd::Zero(H.rows(), H.cols());
    Eigen::MatrixXd d_decayed = Eigen::MatrixXd::Zero(H.rows(), H.cols());
    (pooling == PoolingMode::Raw ? dH : d_decayed).noalias() += enc.attention * d_pooled.transpose();

    const Eigen::VectorXd d_attention = pooled_rows * d_pooled;
    const double mean = enc.attention.dot(d_attention);
    const Eigen::VectorXd d_energy = (enc.attention.array() * (d_attention.array() - mean)).matrix();

    grad.attn_v.noalias() += enc.attn_hidden * d_energy;
    const Eigen::MatrixXd d_pre =
        ((params.attn_v * d_energy.transpose()).array() * (1.0 - enc.attn_hidden.array().square())).matrix();
    grad.attn_W.noalias() += d_pre * decayed;
    grad.attn_b += d_pre.rowwise().sum();
    d_decayed.noalias() += d_pre.transpose() * params.attn_W;

    dH.noalias() += enc.gates.asDiagonal() * d_decayed;
    for (Eigen::Index t = 0; t < H.rows(); ++t) {
        const double g = enc.gates[t];
        const double d_gate = d_decayed.row(t).dot(H.row(t)) * g * (1.0 - g);
        grad.theta += d_gate;
        grad.mu -= d_gate * delta_days[t];
    }
    return dH;
}

}  // namespace seqrisk
