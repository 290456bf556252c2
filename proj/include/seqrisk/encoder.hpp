#pragma once

#include <cstdint>
#include <random>
#include <span>

#include <Eigen/Core>

namespace seqrisk {

/// One LSTM direction. Gate rows are stacked as input, forget, cell, output.
struct LstmParams {
    Eigen::MatrixXd W;  // 4h x d_in
    Eigen::MatrixXd U;  // 4h x h
    Eigen::VectorXd b;  // 4h

    int hidden() const { return static_cast<int>(U.cols()); }
    int input() const { return static_cast<int>(W.cols()); }
};

struct EncoderParams {
    LstmParams forward;
    LstmParams backward;
    double theta = 1.0;  // decay gate offset
    double mu = 0.1;     // decay rate per day
    /// Attention energy: z = attn_v . tanh(attn_W * delta + attn_b).
    Eigen::MatrixXd attn_W;  // d_a x 2h
    Eigen::VectorXd attn_b;  // d_a
    Eigen::VectorXd attn_v;  // d_a

    static EncoderParams zeros(int input_dim, int hidden_dim, int attention_dim);
    /// Recurrent weights uniform in +-1/sqrt(h); attention layer uniform in +-1/sqrt(fan_in).
    static EncoderParams random(int input_dim, int hidden_dim, int attention_dim, std::mt19937_64& rng);

    int hidden_dim() const { return forward.hidden(); }
    int output_dim() const { return 2 * forward.hidden(); }
};

/// Per-direction activations kept for backpropagation. Column t is sequence position t.
struct LstmTrace {
    Eigen::MatrixXd gates;  // 4h x l, post-activation
    Eigen::MatrixXd cell;   // h x l
    Eigen::MatrixXd hidden; // h x l
};

struct BiLstmTrace {
    LstmTrace forward;
    LstmTrace backward;
    Eigen::MatrixXd H;  // l x 2h, row t = [fwd_h_t, bwd_h_t]
};

BiLstmTrace bilstm_forward(const Eigen::MatrixXd& E, const EncoderParams& params);
/// E is l x d_e (one post per row); returns H (l x 2h).
Eigen::MatrixXd bilstm_encode(const Eigen::MatrixXd& E, const EncoderParams& params);
/// Accumulates parameter gradients into grad given dL/dH.
void bilstm_backward(const Eigen::MatrixXd& E, const BiLstmTrace& trace, const Eigen::MatrixXd& dH,
                     const EncoderParams& params, EncoderParams& grad);

/// Raw pools the recurrent states H_t; Gated pools the decayed states delta_t.
enum class PoolingMode { Raw, Gated };

struct SequenceEncoding {
    Eigen::VectorXd attention;    // a, length l, sums to 1
    Eigen::VectorXd pooled;       // u, length 2h
    Eigen::VectorXd gates;        // sigma(theta - mu * dt), length l
    Eigen::VectorXd energies;     // z, length l
    Eigen::MatrixXd attn_hidden;  // tanh activations, d_a x l
};

SequenceEncoding temporal_attention(const Eigen::MatrixXd& H, std::span<const double> delta_days,
                                    const EncoderParams& params, PoolingMode pooling = PoolingMode::Raw);

/// Returns dL/dH and accumulates theta, mu and attention-layer gradients.
Eigen::MatrixXd temporal_attention_backward(const Eigen::MatrixXd& H, std::span<const double> delta_days,
                                            const SequenceEncoding& enc, const Eigen::VectorXd& d_pooled,
                                            const EncoderParams& params, EncoderParams& grad,
                                            PoolingMode pooling = PoolingMode::Raw);

Eigen::VectorXd softmax(const Eigen::VectorXd& z);
double sigmoid(double x);

}  // namespace seqrisk
