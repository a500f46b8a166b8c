#pragma once

#include "mmt/rng.hpp"
#include "mmt/tensor.hpp"

namespace mmt {

// Shared initialization conventions: truncated normal (|x| <= 2 sigma,
// sigma = 0.02) for weights and embeddings, zeros for biases, ones/zeros
// for LN affine.
inline Tensor init_weight(std::vector<std::size_t> shape, Rng& rng, double stddev = 0.02) {
    Tensor t(std::move(shape));
    for (double& v : t.data) v = rng.truncated_normal(stddev);
    return t;
}

inline Tensor init_zeros(std::vector<std::size_t> shape) { return Tensor::zeros(std::move(shape)); }

inline Tensor init_ones(std::vector<std::size_t> shape) {
    return Tensor::full(std::move(shape), 1.0);
}

}  // namespace mmt
