#pragma once

#include "mmt/ops.hpp"
#include "mmt/rng.hpp"
#include "mmt/tokens.hpp"

namespace mmt {

struct EncoderConfig {
    std::size_t depth = 2;
    std::size_t heads = 4;
    std::size_t dim = 64;
    std::size_t mlp_dim = 256;
    std::size_t n_max = 256;

    void validate() const;
    bool operator==(const EncoderConfig&) const = default;
};

struct AttentionCtx {
    LayerNormCtx ln;
    Tensor normed;              // LN output
    Tensor q, k, v;             // (n+1) x D
    std::vector<Tensor> attn;   // per head, (n+1) x (n+1) softmax rows
    Tensor heads_out;           // (n+1) x D concatenated head outputs
};

struct MlpCtx {
    LayerNormCtx ln;
    Tensor normed;
    Tensor hidden_pre;   // before GELU
    Tensor hidden_act;
};

struct BlockCtx {
    Tensor input;   // residual base of the attention half
    AttentionCtx attn;
    Tensor mid;     // residual base of the MLP half
    MlpCtx mlp;
};

struct EncodeCtx {
    std::vector<BlockCtx> blocks;
    Tensor pre_final;  // z_L before the final LN
    LayerNormCtx final_ln;
};

struct EncodeResult {
    Tensor summary;  // final LN applied to row 0 (the CLS position)
    Tensor tokens;   // final LN applied to every row
};

// Modality-shared pre-norm transformer stack. One parameter set encodes
// sequences from every tokenizer; there is no per-modality branch here.
class Encoder {
public:
    Encoder(const EncoderConfig& cfg, ParameterSet& params, Rng& rng);

    // z0 is (n+1) x D from add_position_embeddings.
    EncodeResult forward(const Tensor& z0, EncodeCtx* ctx = nullptr) const;

    // Either gradient may be empty (size 0). Returns d_z0 and accumulates
    // into parameter grads.
    Tensor backward(const EncodeCtx& ctx, const Tensor& d_summary, const Tensor& d_tokens) const;

    // One attention or MLP block in isolation (row 0 need not be CLS).
    // The backward variants return d_z and accumulate parameter grads.
    Tensor attention_block(std::size_t layer, const Tensor& z, BlockCtx* ctx = nullptr) const;
    Tensor attention_block_backward(std::size_t layer, const BlockCtx& ctx,
                                    const Tensor& d_out) const;
    Tensor mlp_block(std::size_t layer, const Tensor& z, MlpCtx* ctx = nullptr) const;
    Tensor mlp_block_backward(std::size_t layer, const MlpCtx& ctx, const Tensor& d_out) const;

    void freeze();
    void unfreeze();
    bool frozen() const { return frozen_; }

    const EncoderConfig& config() const { return cfg_; }
    static std::size_t parameter_count(const EncoderConfig& cfg);

private:
    struct BlockParams {
        Parameter *ln1_g, *ln1_b;
        Parameter *wq, *bq, *wk, *bk, *wv, *bv, *wo, *bo;
        Parameter *ln2_g, *ln2_b;
        Parameter *w1, *b1, *w2, *b2;
    };

    Tensor attention_forward(const BlockParams& bp, const Tensor& z, AttentionCtx* ctx) const;
    Tensor attention_backward(const BlockParams& bp, const AttentionCtx& ctx, const Tensor& z,
                              const Tensor& d_out) const;
    Tensor mlp_forward(const BlockParams& bp, const Tensor& z, MlpCtx* ctx) const;
    Tensor mlp_backward(const BlockParams& bp, const MlpCtx& ctx, const Tensor& d_out) const;

    EncoderConfig cfg_;
    std::vector<BlockParams> blocks_;
    Parameter *final_g_, *final_b_;
    std::vector<Parameter*> all_params_;
    bool frozen_ = false;
};

}  // namespace mmt
