#pragma once

#include <cstdint>
#include <vector>

#include "gonet/common.hpp"
#include "gonet/rng.hpp"
#include "gonet/tensor.hpp"

namespace gonet {

enum class Mode { train, eval };

enum class Activation { none, relu, sigmoid };

// Running statistics for one batch-norm layer. `steps` counts train-mode
// forwards; eval mode before the first one is an error.
template <class S>
struct BatchNormState {
    std::vector<S> running_mean;
    std::vector<S> running_var;
    std::int64_t steps = 0;
    double momentum = 0.1;
    double eps = 1e-5;

    explicit BatchNormState(std::int64_t channels = 0)
        : running_mean(static_cast<std::size_t>(channels), S(0)),
          running_var(static_cast<std::size_t>(channels), S(1)) {}
};

// One direction's GRU weights. Input projections are I x H, recurrent
// projections H x H, biases H.
template <class S>
struct GruWeights {
    Tensor<S> wz, wr, wh;
    Tensor<S> uz, ur, uh;
    Tensor<S> bz, br, bh;

    std::int64_t input_dim() const { return wz.dim(0); }
    std::int64_t hidden_dim() const { return wz.dim(1); }
};

// Row gather: indices (B x L) into table (V x E) -> (B x L x E).
// Backward scatters into the gathered rows.
template <class S>
Tensor<S> embedding_forward(const IntMatrix& indices, const Tensor<S>& table);

// Zeroes every channel at masked positions: y[b,l,:] = mask[b,l] ? x[b,l,:] : 0.
// Applied to the embedded sequence so convolution windows near the boundary
// see the same zeros regardless of how far the padding extends.
template <class S>
Tensor<S> mask_positions(const Tensor<S>& input, const ByteMatrix& mask);

// 1-D cross-correlation with zero padding of (K-1)/2 so the sequence length
// is preserved. input (B x L x Cin), weight (K x Cin x Cout), bias (Cout).
template <class S>
Tensor<S> conv1d_same(const Tensor<S>& input, const Tensor<S>& weight, const Tensor<S>& bias);

// Per-channel normalization over the B and L axes. Train mode uses batch
// statistics and updates the running stats; eval mode uses the running stats.
template <class S>
Tensor<S> batchnorm_forward(const Tensor<S>& input, const Tensor<S>& gamma, const Tensor<S>& beta,
                            BatchNormState<S>& state, Mode mode);

// Single GRU step:
//   z = sigmoid(x Wz + h Uz + bz)
//   r = sigmoid(x Wr + h Ur + br)
//   c = tanh(x Wh + (r . h) Uh + bh)
//   h' = (1 - z) . h + z . c
// Composed from primitives, so it differentiates through the generic engine.
template <class S>
Tensor<S> gru_cell(const Tensor<S>& x, const Tensor<S>& h_prev, const GruWeights<S>& w);

// Full scan over the sequence axis with hand-written BPTT. Masked positions
// carry the hidden state through unchanged and contribute no gradient.
// reverse=false scans t = 0..L-1, reverse=true scans t = L-1..0.
template <class S>
Tensor<S> gru_sequence(const Tensor<S>& input, const ByteMatrix& mask, const GruWeights<S>& w,
                       bool reverse);

// Concatenation of the forward and reverse scans: (B x L x 2H).
template <class S>
Tensor<S> bigru_forward(const Tensor<S>& input, const ByteMatrix& mask, const GruWeights<S>& fwd,
                        const GruWeights<S>& bwd);

// Per-sample mean over unmasked positions: (B x L x C) -> (B x C).
template <class S>
Tensor<S> masked_mean_pool(const Tensor<S>& input, const ByteMatrix& mask);

// Affine map with optional activation: (B x F) x (F x O) + (O).
template <class S>
Tensor<S> dense_forward(const Tensor<S>& input, const Tensor<S>& weight, const Tensor<S>& bias,
                        Activation act);

// Inverted dropout: train mode zeroes elements with probability `rate` and
// scales survivors by 1/(1-rate); eval mode is the identity.
template <class S>
Tensor<S> dropout(const Tensor<S>& input, double rate, Mode mode, Rng& rng);

// Multi-label binary cross-entropy, summed over labels and averaged over the
// batch dimension only. Predictions are clamped to [1e-7, 1 - 1e-7] before
// the logarithm.
template <class S>
Tensor<S> bce_multilabel_loss(const Tensor<S>& pred, const ByteMatrix& target);

}  // namespace gonet
