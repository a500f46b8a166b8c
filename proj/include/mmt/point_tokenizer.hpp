#pragma once

#include "mmt/rng.hpp"
#include "mmt/tokens.hpp"

namespace mmt {

// Greedy farthest point sampling over Euclidean distance on the first
// three columns. Starts at index 0; each round picks the point with the
// largest distance to its nearest selected point, lowest index on ties.
// Returns `count` indices in selection order.
std::vector<std::size_t> farthest_point_sample(const Tensor& points, std::size_t count);

// K nearest points (the center is its own nearest at distance 0) per
// center, ordered by (distance, index).
std::vector<std::vector<std::size_t>> knn_group(const Tensor& points,
                                                const std::vector<std::size_t>& centers,
                                                std::size_t k);

struct PointStageCtx {
    std::vector<std::size_t> centers;          // into the stage's input point list
    std::vector<std::vector<std::size_t>> groups;
    Tensor inputs;                             // (centers*K) x in_dim rows fed to the linear
    Tensor pre_act;                            // (centers*K) x out_dim, before GELU
    std::vector<std::size_t> argmax;           // centers*out_dim -> winning flat row
};

struct PointTokenizerCtx {
    PointStageCtx stage1, stage2;
    std::size_t feature_dim = 0;
};

// Two cascaded set-abstraction stages (FPS ratio 1/4, KNN grouping,
// shared per-point linear + GELU, max-pool over the K members):
// P x (3+c) -> P/4 x D/2 -> P/16 x D. Neighbor coordinates are expressed
// relative to their group center, which makes the tokens translation
// invariant when no raw features are present.
class PointCloudTokenizer {
public:
    PointCloudTokenizer(std::size_t feature_dim, std::size_t dim, std::size_t k,
                        std::size_t n_max, ParameterSet& params, Rng& rng);

    TokenSequence tokenize(const Tensor& points, PointTokenizerCtx* ctx = nullptr) const;
    void backward(const PointTokenizerCtx& ctx, const Tensor& d_tokens);

    std::size_t k() const { return k_; }
    Parameter& stage1_weight() { return *w1_; }
    Parameter& stage2_weight() { return *w2_; }
    Parameter& pos() { return *pos_; }
    Parameter& cls() { return *cls_; }

private:
    std::size_t feature_dim_, dim_, k_;
    Parameter *w1_, *b1_, *w2_, *b2_, *pos_, *cls_;
};

}  // namespace mmt
