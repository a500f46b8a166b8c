#include "mmt/encoder.hpp"

#include <cmath>

#include "mmt/init.hpp"

namespace mmt {

void EncoderConfig::validate() const {
    if (depth < 1) throw ConfigError("encoder: depth must be >= 1");
    if (heads < 1 || dim < 1 || mlp_dim < 1 || n_max < 1) {
        throw ConfigError("encoder: all extents must be positive");
    }
    if (dim % heads != 0) {
        throw ConfigError("encoder: dim " + std::to_string(dim) + " not divisible by " +
                          std::to_string(heads) + " heads");
    }
}

std::size_t Encoder::parameter_count(const EncoderConfig& cfg) {
    const std::size_t d = cfg.dim, m = cfg.mlp_dim;
    const std::size_t per_block = 2 * d                    // ln1
                                  + 4 * (d * d + d)        // q, k, v, out projections
                                  + 2 * d                  // ln2
                                  + (d * m + m) + (m * d + d);  // mlp
    return cfg.depth * per_block + 2 * d;  // + final ln
}

Encoder::Encoder(const EncoderConfig& cfg, ParameterSet& params, Rng& rng) : cfg_(cfg) {
    cfg_.validate();
    const std::size_t d = cfg.dim, m = cfg.mlp_dim;
    auto weight = [&](const std::string& name, std::size_t r, std::size_t c) {
        return &params.create(name, init_weight({r, c}, rng));
    };
    auto bias = [&](const std::string& name, std::size_t n) {
        return &params.create(name, init_zeros({n}));
    };
    for (std::size_t layer = 0; layer < cfg.depth; ++layer) {
        const std::string base = "encoder.block" + std::to_string(layer) + ".";
        BlockParams bp{};
        bp.ln1_g = &params.create(base + "ln1.gamma", init_ones({d}));
        bp.ln1_b = &params.create(base + "ln1.beta", init_zeros({d}));
        bp.wq = weight(base + "attn.wq", d, d);
        bp.bq = bias(base + "attn.bq", d);
        bp.wk = weight(base + "attn.wk", d, d);
        bp.bk = bias(base + "attn.bk", d);
        bp.wv = weight(base + "attn.wv", d, d);
        bp.bv = bias(base + "attn.bv", d);
        bp.wo = weight(base + "attn.wo", d, d);
        bp.bo = bias(base + "attn.bo", d);
        bp.ln2_g = &params.create(base + "ln2.gamma", init_ones({d}));
        bp.ln2_b = &params.create(base + "ln2.beta", init_zeros({d}));
        bp.w1 = weight(base + "mlp.w1", d, m);
        bp.b1 = bias(base + "mlp.b1", m);
        bp.w2 = weight(base + "mlp.w2", m, d);
        bp.b2 = bias(base + "mlp.b2", d);
        blocks_.push_back(bp);
        for (Parameter* p : {bp.ln1_g, bp.ln1_b, bp.wq, bp.bq, bp.wk, bp.bk, bp.wv, bp.bv, bp.wo,
                             bp.bo, bp.ln2_g, bp.ln2_b, bp.w1, bp.b1, bp.w2, bp.b2}) {
            all_params_.push_back(p);
        }
    }
    final_g_ = &params.create("encoder.final_ln.gamma", init_ones({d}));
    final_b_ = &params.create("encoder.final_ln.beta", init_zeros({d}));
    all_params_.push_back(final_g_);
    all_params_.push_back(final_b_);
}

void Encoder::freeze() {
    frozen_ = true;
    for (Parameter* p : all_params_) p->trainable = false;
}

void Encoder::unfreeze() {
    frozen_ = false;
    for (Parameter* p : all_params_) p->trainable = true;
}

Tensor Encoder::attention_forward(const BlockParams& bp, const Tensor& z,
                                  AttentionCtx* ctx) const {
    const std::size_t n1 = z.rows(), d = cfg_.dim, h = cfg_.heads, hd = d / h;
    const double scale = 1.0 / std::sqrt(static_cast<double>(hd));

    AttentionCtx local;
    AttentionCtx& c = ctx ? *ctx : local;
    c.normed = layer_norm(z, bp.ln1_g->value, bp.ln1_b->value, 1e-5, &c.ln);
    c.q = linear(c.normed, bp.wq->value, bp.bq->value);
    c.k = linear(c.normed, bp.wk->value, bp.bk->value);
    c.v = linear(c.normed, bp.wv->value, bp.bv->value);

    c.attn.assign(h, Tensor());
    c.heads_out = Tensor({n1, d});
    for (std::size_t head = 0; head < h; ++head) {
        const std::size_t off = head * hd;
        Tensor scores({n1, n1});
        for (std::size_t i = 0; i < n1; ++i) {
            const double* qi = &c.q.data[i * d + off];
            for (std::size_t j = 0; j < n1; ++j) {
                const double* kj = &c.k.data[j * d + off];
                double acc = 0.0;
                for (std::size_t e = 0; e < hd; ++e) acc += qi[e] * kj[e];
                scores(i, j) = acc * scale;
            }
        }
        c.attn[head] = softmax_rows(scores);
        for (std::size_t i = 0; i < n1; ++i) {
            double* out = &c.heads_out.data[i * d + off];
            for (std::size_t j = 0; j < n1; ++j) {
                const double a = c.attn[head](i, j);
                const double* vj = &c.v.data[j * d + off];
                for (std::size_t e = 0; e < hd; ++e) out[e] += a * vj[e];
            }
        }
    }
    Tensor out = linear(c.heads_out, bp.wo->value, bp.bo->value);
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += z.data[i];  // residual
    return out;
}

Tensor Encoder::attention_backward(const BlockParams& bp, const AttentionCtx& ctx, const Tensor& z,
                                   const Tensor& d_out) const {
    const std::size_t n1 = z.rows(), d = cfg_.dim, h = cfg_.heads, hd = d / h;
    const double scale = 1.0 / std::sqrt(static_cast<double>(hd));

    Tensor d_z = d_out;  // residual path
    d_z.grad.clear();

    // through the output projection
    Tensor d_heads({n1, d});
    bp.wo->value.ensure_grad();
    bp.bo->value.ensure_grad();
    {
        Tensor d_wo(bp.wo->value.shape), d_bo(bp.bo->value.shape);
        linear_backward(ctx.heads_out, bp.wo->value, d_out, &d_heads, &d_wo, &d_bo);
        for (std::size_t i = 0; i < d_wo.size(); ++i) bp.wo->value.grad[i] += d_wo.data[i];
        for (std::size_t i = 0; i < d_bo.size(); ++i) bp.bo->value.grad[i] += d_bo.data[i];
    }

    Tensor d_q({n1, d}), d_k({n1, d}), d_v({n1, d});
    for (std::size_t head = 0; head < h; ++head) {
        const std::size_t off = head * hd;
        const Tensor& attn = ctx.attn[head];
        // dA from d_heads through O = A * V_head
        Tensor d_attn({n1, n1});
        for (std::size_t i = 0; i < n1; ++i) {
            const double* dout_i = &d_heads.data[i * d + off];
            for (std::size_t j = 0; j < n1; ++j) {
                const double* vj = &ctx.v.data[j * d + off];
                double acc = 0.0;
                for (std::size_t e = 0; e < hd; ++e) acc += dout_i[e] * vj[e];
                d_attn(i, j) = acc;
                // dV_j += A(i,j) * dout_i
                const double a = attn(i, j);
                double* dvj = &d_v.data[j * d + off];
                for (std::size_t e = 0; e < hd; ++e) dvj[e] += a * dout_i[e];
            }
        }
        Tensor d_scores({n1, n1});
        softmax_rows_backward(attn, d_attn, d_scores);
        for (std::size_t i = 0; i < n1; ++i) {
            for (std::size_t j = 0; j < n1; ++j) {
                const double g = d_scores(i, j) * scale;
                const double* kj = &ctx.k.data[j * d + off];
                const double* qi = &ctx.q.data[i * d + off];
                double* dqi = &d_q.data[i * d + off];
                double* dkj = &d_k.data[j * d + off];
                for (std::size_t e = 0; e < hd; ++e) {
                    dqi[e] += g * kj[e];
                    dkj[e] += g * qi[e];
                }
            }
        }
    }

    // through the three projections into the LN output
    Tensor d_normed({n1, d});
    auto proj_back = [&](const Tensor& d_proj, Parameter* w, Parameter* b) {
        w->value.ensure_grad();
        b->value.ensure_grad();
        Tensor d_w(w->value.shape), d_b(b->value.shape);
        linear_backward(ctx.normed, w->value, d_proj, &d_normed, &d_w, &d_b);
        for (std::size_t i = 0; i < d_w.size(); ++i) w->value.grad[i] += d_w.data[i];
        for (std::size_t i = 0; i < d_b.size(); ++i) b->value.grad[i] += d_b.data[i];
    };
    proj_back(d_q, bp.wq, bp.bq);
    proj_back(d_k, bp.wk, bp.bk);
    proj_back(d_v, bp.wv, bp.bv);

    // through LN1 into the block input
    bp.ln1_g->value.ensure_grad();
    bp.ln1_b->value.ensure_grad();
    {
        Tensor d_g(bp.ln1_g->value.shape), d_b(bp.ln1_b->value.shape);
        Tensor d_x({n1, d});
        layer_norm_backward(ctx.ln, bp.ln1_g->value, d_normed, &d_x, &d_g, &d_b);
        for (std::size_t i = 0; i < d_g.size(); ++i) bp.ln1_g->value.grad[i] += d_g.data[i];
        for (std::size_t i = 0; i < d_b.size(); ++i) bp.ln1_b->value.grad[i] += d_b.data[i];
        for (std::size_t i = 0; i < d_z.size(); ++i) d_z.data[i] += d_x.data[i];
    }
    return d_z;
}

Tensor Encoder::mlp_forward(const BlockParams& bp, const Tensor& z, MlpCtx* ctx) const {
    MlpCtx local;
    MlpCtx& c = ctx ? *ctx : local;
    c.normed = layer_norm(z, bp.ln2_g->value, bp.ln2_b->value, 1e-5, &c.ln);
    c.hidden_pre = linear(c.normed, bp.w1->value, bp.b1->value);
    c.hidden_act = gelu(c.hidden_pre);
    Tensor out = linear(c.hidden_act, bp.w2->value, bp.b2->value);
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += z.data[i];  // residual
    return out;
}

Tensor Encoder::mlp_backward(const BlockParams& bp, const MlpCtx& ctx, const Tensor& d_out) const {
    const std::size_t n1 = ctx.normed.rows(), d = cfg_.dim;

    Tensor d_z = d_out;  // residual path
    d_z.grad.clear();

    bp.w2->value.ensure_grad();
    bp.b2->value.ensure_grad();
    Tensor d_act(ctx.hidden_act.shape);
    {
        Tensor d_w(bp.w2->value.shape), d_b(bp.b2->value.shape);
        linear_backward(ctx.hidden_act, bp.w2->value, d_out, &d_act, &d_w, &d_b);
        for (std::size_t i = 0; i < d_w.size(); ++i) bp.w2->value.grad[i] += d_w.data[i];
        for (std::size_t i = 0; i < d_b.size(); ++i) bp.b2->value.grad[i] += d_b.data[i];
    }
    Tensor d_pre(ctx.hidden_pre.shape);
    gelu_backward(ctx.hidden_pre, d_act, d_pre);

    bp.w1->value.ensure_grad();
    bp.b1->value.ensure_grad();
    Tensor d_normed({n1, d});
    {
        Tensor d_w(bp.w1->value.shape), d_b(bp.b1->value.shape);
        linear_backward(ctx.normed, bp.w1->value, d_pre, &d_normed, &d_w, &d_b);
        for (std::size_t i = 0; i < d_w.size(); ++i) bp.w1->value.grad[i] += d_w.data[i];
        for (std::size_t i = 0; i < d_b.size(); ++i) bp.b1->value.grad[i] += d_b.data[i];
    }

    bp.ln2_g->value.ensure_grad();
    bp.ln2_b->value.ensure_grad();
    {
        Tensor d_g(bp.ln2_g->value.shape), d_b(bp.ln2_b->value.shape);
        Tensor d_x({n1, d});
        layer_norm_backward(ctx.ln, bp.ln2_g->value, d_normed, &d_x, &d_g, &d_b);
        for (std::size_t i = 0; i < d_g.size(); ++i) bp.ln2_g->value.grad[i] += d_g.data[i];
        for (std::size_t i = 0; i < d_b.size(); ++i) bp.ln2_b->value.grad[i] += d_b.data[i];
        for (std::size_t i = 0; i < d_z.size(); ++i) d_z.data[i] += d_x.data[i];
    }
    return d_z;
}

EncodeResult Encoder::forward(const Tensor& z0, EncodeCtx* ctx) const {
    if (z0.rank() != 2 || z0.cols() != cfg_.dim) {
        throw ShapeError("encode: expected (n+1) x " + std::to_string(cfg_.dim) + " input, got " +
                         z0.shape_string());
    }
    if (z0.rows() > cfg_.n_max + 1) {
        throw SequenceLengthError("encode: " + std::to_string(z0.rows()) +
                                  " rows exceed n_max+1 = " + std::to_string(cfg_.n_max + 1));
    }
    EncodeCtx local;
    EncodeCtx& c = ctx ? *ctx : local;
    c.blocks.assign(cfg_.depth, BlockCtx());

    Tensor z = z0;
    z.grad.clear();
    for (std::size_t layer = 0; layer < cfg_.depth; ++layer) {
        BlockCtx& bc = c.blocks[layer];
        bc.input = z;
        z = attention_forward(blocks_[layer], z, &bc.attn);
        bc.mid = z;
        z = mlp_forward(blocks_[layer], z, &bc.mlp);
    }
    c.pre_final = z;

    EncodeResult result;
    result.tokens = layer_norm(z, final_g_->value, final_b_->value, 1e-5, &c.final_ln);
    result.summary = slice_rows(result.tokens, 0, 1);
    result.summary.shape = {cfg_.dim};
    return result;
}

Tensor Encoder::backward(const EncodeCtx& ctx, const Tensor& d_summary,
                         const Tensor& d_tokens) const {
    const std::size_t n1 = ctx.pre_final.rows(), d = cfg_.dim;
    Tensor d_final({n1, d});
    if (d_tokens.size() > 0) {
        require_same_shape(ctx.pre_final, d_tokens, "encode backward (d_tokens)");
        for (std::size_t i = 0; i < d_final.size(); ++i) d_final.data[i] = d_tokens.data[i];
    }
    if (d_summary.size() > 0) {
        if (d_summary.size() != d) {
            throw ShapeError("encode backward: summary grad " + d_summary.shape_string());
        }
        for (std::size_t j = 0; j < d; ++j) d_final.data[j] += d_summary.data[j];
    }

    final_g_->value.ensure_grad();
    final_b_->value.ensure_grad();
    Tensor d_z({n1, d});
    {
        Tensor d_g(final_g_->value.shape), d_b(final_b_->value.shape);
        layer_norm_backward(ctx.final_ln, final_g_->value, d_final, &d_z, &d_g, &d_b);
        for (std::size_t i = 0; i < d_g.size(); ++i) final_g_->value.grad[i] += d_g.data[i];
        for (std::size_t i = 0; i < d_b.size(); ++i) final_b_->value.grad[i] += d_b.data[i];
    }

    for (std::size_t layer = cfg_.depth; layer-- > 0;) {
        const BlockCtx& bc = ctx.blocks[layer];
        d_z = mlp_backward(blocks_[layer], bc.mlp, d_z);
        d_z = attention_backward(blocks_[layer], bc.attn, bc.input, d_z);
    }
    return d_z;
}

Tensor Encoder::attention_block(std::size_t layer, const Tensor& z, BlockCtx* ctx) const {
    if (layer >= blocks_.size()) throw ArgumentError("attention_block: layer out of range");
    if (ctx) {
        ctx->input = z;
        return attention_forward(blocks_[layer], z, &ctx->attn);
    }
    return attention_forward(blocks_[layer], z, nullptr);
}

Tensor Encoder::attention_block_backward(std::size_t layer, const BlockCtx& ctx,
                                         const Tensor& d_out) const {
    if (layer >= blocks_.size()) throw ArgumentError("attention_block_backward: layer out of range");
    return attention_backward(blocks_[layer], ctx.attn, ctx.input, d_out);
}

Tensor Encoder::mlp_block(std::size_t layer, const Tensor& z, MlpCtx* ctx) const {
    if (layer >= blocks_.size()) throw ArgumentError("mlp_block: layer out of range");
    return mlp_forward(blocks_[layer], z, ctx);
}

Tensor Encoder::mlp_block_backward(std::size_t layer, const MlpCtx& ctx,
                                   const Tensor& d_out) const {
    if (layer >= blocks_.size()) throw ArgumentError("mlp_block_backward: layer out of range");
    return mlp_backward(blocks_[layer], ctx, d_out);
}

}  // namespace mmt
