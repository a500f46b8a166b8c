#pragma once

#include <vector>

#include "mmt/tensor.hpp"

namespace mmt {

// Forward/backward pairs for the fixed set of layers the architecture
// needs. Every backward ACCUMULATES (+=) into its output gradients, which
// must already have the right shape; callers zero them per step. Gradients
// flow as plain tensors, not through Tensor::grad, except where a caller
// routes them into parameter buffers.

Tensor matmul(const Tensor& a, const Tensor& b);
// dA += dC * B^T, dB += A^T * dC
void matmul_backward(const Tensor& a, const Tensor& b, const Tensor& d_out, Tensor* d_a,
                     Tensor* d_b);

Tensor softmax_rows(const Tensor& x);
// y is the forward output; dX += y .* (dY - rowsum(dY .* y))
void softmax_rows_backward(const Tensor& y, const Tensor& d_y, Tensor& d_x);

struct LayerNormCtx {
    Tensor x_hat;                 // normalized pre-affine rows
    std::vector<double> inv_std;  // per-row 1/sqrt(var + eps)
};

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5,
                  LayerNormCtx* ctx = nullptr);
void layer_norm_backward(const LayerNormCtx& ctx, const Tensor& gamma, const Tensor& d_y,
                         Tensor* d_x, Tensor* d_gamma, Tensor* d_beta);

// Exact erf form: x * Phi(x).
Tensor gelu(const Tensor& x);
void gelu_backward(const Tensor& x, const Tensor& d_y, Tensor& d_x);
double gelu_scalar(double x);
double gelu_grad_scalar(double x);

// y = x*W + b with b broadcast over rows.
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);
void linear_backward(const Tensor& x, const Tensor& w, const Tensor& d_y, Tensor* d_x, Tensor* d_w,
                     Tensor* d_b);

// Mean negative log-softmax-probability of the true class.
double cross_entropy(const Tensor& logits, const std::vector<int>& labels);
// dLogits += (softmax(logits) - onehot) / B
void cross_entropy_backward(const Tensor& logits, const std::vector<int>& labels, Tensor& d_logits);

}  // namespace mmt
