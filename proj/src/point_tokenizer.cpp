#include "mmt/point_tokenizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mmt/init.hpp"
#include "mmt/ops.hpp"

namespace mmt {

namespace {

double dist2(const Tensor& points, std::size_t a, std::size_t b) {
    const std::size_t w = points.cols();
    const double* pa = &points.data[a * w];
    const double* pb = &points.data[b * w];
    double acc = 0.0;
    for (int i = 0; i < 3; ++i) {
        const double d = pa[i] - pb[i];
        acc += d * d;
    }
    return acc;
}

void require_cloud(const Tensor& points, const char* where) {
    if (points.rank() != 2 || points.cols() < 3) {
        throw ShapeError(std::string(where) + ": expected P x (3+c) points, got " +
                         points.shape_string());
    }
}

}  // namespace

std::vector<std::size_t> farthest_point_sample(const Tensor& points, std::size_t count) {
    require_cloud(points, "farthest_point_sample");
    const std::size_t p = points.rows();
    if (count < 1 || count > p) {
        throw ArgumentError("farthest_point_sample: count " + std::to_string(count) +
                            " outside [1, " + std::to_string(p) + "]");
    }
    std::vector<std::size_t> selected;
    selected.reserve(count);
    selected.push_back(0);
    std::vector<char> taken(p, 0);
    taken[0] = 1;
    std::vector<double> nearest(p, std::numeric_limits<double>::infinity());
    for (std::size_t round = 1; round < count; ++round) {
        const std::size_t last = selected.back();
        double best = -1.0;
        std::size_t best_idx = p;
        for (std::size_t i = 0; i < p; ++i) {
            nearest[i] = std::min(nearest[i], dist2(points, i, last));
            // candidates are unselected points; strict > keeps the lowest index on ties
            if (!taken[i] && nearest[i] > best) {
                best = nearest[i];
                best_idx = i;
            }
        }
        taken[best_idx] = 1;
        selected.push_back(best_idx);
    }
    return selected;
}

std::vector<std::vector<std::size_t>> knn_group(const Tensor& points,
                                                const std::vector<std::size_t>& centers,
                                                std::size_t k) {
    require_cloud(points, "knn_group");
    const std::size_t p = points.rows();
    if (k < 1 || k > p) {
        throw ArgumentError("knn_group: K " + std::to_string(k) + " outside [1, " +
                            std::to_string(p) + "]");
    }
    std::vector<std::vector<std::size_t>> groups;
    groups.reserve(centers.size());
    std::vector<std::pair<double, std::size_t>> order(p);
    for (std::size_t center : centers) {
        if (center >= p) {
            throw ArgumentError("knn_group: center index " + std::to_string(center) +
                                " out of range");
        }
        for (std::size_t i = 0; i < p; ++i) order[i] = {dist2(points, i, center), i};
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k),
                          order.end());
        std::vector<std::size_t> group(k);
        for (std::size_t i = 0; i < k; ++i) group[i] = order[i].second;
        groups.push_back(std::move(group));
    }
    return groups;
}

PointCloudTokenizer::PointCloudTokenizer(std::size_t feature_dim, std::size_t dim, std::size_t k,
                                         std::size_t n_max, ParameterSet& params, Rng& rng)
    : feature_dim_(feature_dim), dim_(dim), k_(k) {
    if (dim % 2 != 0) throw ConfigError("point tokenizer: D must be even (stage 1 emits D/2)");
    if (k < 1) throw ConfigError("point tokenizer: K must be positive");
    w1_ = &params.create("tok.point.stage1.w", init_weight({3 + feature_dim, dim / 2}, rng));
    b1_ = &params.create("tok.point.stage1.b", init_zeros({dim / 2}));
    w2_ = &params.create("tok.point.stage2.w", init_weight({3 + dim / 2, dim}, rng));
    b2_ = &params.create("tok.point.stage2.b", init_zeros({dim}));
    pos_ = &params.create("tok.point.pos", init_weight({n_max + 1, dim}, rng));
    cls_ = &params.create("tok.point.cls", init_weight({1, dim}, rng));
}

namespace {

// One set-abstraction stage. Input points are P x (3+f); output is
// centers x (3+out_dim): center coordinates followed by pooled features.
Tensor run_stage(const Tensor& points, std::size_t center_count, std::size_t k,
                 const Tensor& w, const Tensor& b, PointStageCtx* ctx) {
    const std::size_t in_width = points.cols();
    const std::size_t feat = in_width - 3;
    const std::size_t out_dim = w.cols();
    if (w.rows() != 3 + feat) {
        throw ShapeError("point stage: weight " + w.shape_string() + " does not match inputs of " +
                         std::to_string(3 + feat));
    }
    const std::size_t kk = std::min(k, points.rows());
    const std::vector<std::size_t> centers = farthest_point_sample(points, center_count);
    const std::vector<std::vector<std::size_t>> groups = knn_group(points, centers, kk);

    Tensor inputs({center_count * kk, 3 + feat});
    for (std::size_t g = 0; g < center_count; ++g) {
        const double* cp = &points.data[centers[g] * in_width];
        for (std::size_t t = 0; t < kk; ++t) {
            const double* np = &points.data[groups[g][t] * in_width];
            double* row = &inputs.data[(g * kk + t) * (3 + feat)];
            for (int i = 0; i < 3; ++i) row[i] = np[i] - cp[i];  // center-relative coords
            for (std::size_t i = 0; i < feat; ++i) row[3 + i] = np[3 + i];
        }
    }
    Tensor pre = linear(inputs, w, b);

    Tensor out({center_count, 3 + out_dim});
    std::vector<std::size_t> argmax(center_count * out_dim);
    for (std::size_t g = 0; g < center_count; ++g) {
        const double* cp = &points.data[centers[g] * in_width];
        double* orow = &out.data[g * (3 + out_dim)];
        for (int i = 0; i < 3; ++i) orow[i] = cp[i];
        for (std::size_t j = 0; j < out_dim; ++j) {
            std::size_t best_row = g * kk;
            double best = gelu_scalar(pre.data[best_row * out_dim + j]);
            for (std::size_t t = 1; t < kk; ++t) {
                const std::size_t r = g * kk + t;
                const double v = gelu_scalar(pre.data[r * out_dim + j]);
                if (v > best) {
                    best = v;
                    best_row = r;
                }
            }
            orow[3 + j] = best;
            argmax[g * out_dim + j] = best_row;
        }
    }
    if (ctx) {
        ctx->centers = centers;
        ctx->groups = groups;
        ctx->inputs = std::move(inputs);
        ctx->pre_act = std::move(pre);
        ctx->argmax = std::move(argmax);
    }
    return out;
}

// Gradient of one stage. d_out covers only the pooled feature columns
// (centers x out_dim); returns the gradient w.r.t. the input points'
// feature columns (P_in x feat) for the stage below. Coordinate columns
// carry no trainable signal upstream.
Tensor stage_backward(const PointStageCtx& ctx, std::size_t in_points, const Tensor& w,
                      Parameter& w_param, Parameter& b_param, const Tensor& d_out) {
    const std::size_t centers = ctx.centers.size();
    const std::size_t out_dim = w.cols();
    const std::size_t in_width = w.rows();
    const std::size_t feat = in_width - 3;
    const std::size_t kk = ctx.groups.empty() ? 0 : ctx.groups[0].size();

    // max-pool routes each output dim to its winning row; GELU backward at
    // the winner's pre-activation.
    Tensor d_pre({centers * kk, out_dim});
    for (std::size_t g = 0; g < centers; ++g) {
        for (std::size_t j = 0; j < out_dim; ++j) {
            const std::size_t row = ctx.argmax[g * out_dim + j];
            const double up = d_out.data[g * out_dim + j];
            d_pre.data[row * out_dim + j] +=
                up * gelu_grad_scalar(ctx.pre_act.data[row * out_dim + j]);
        }
    }

    w_param.value.ensure_grad();
    b_param.value.ensure_grad();
    Tensor d_inputs(ctx.inputs.shape);
    Tensor d_w(w_param.value.shape);
    Tensor d_b(b_param.value.shape);
    linear_backward(ctx.inputs, w, d_pre, &d_inputs, &d_w, &d_b);
    for (std::size_t i = 0; i < d_w.size(); ++i) w_param.value.grad[i] += d_w.data[i];
    for (std::size_t i = 0; i < d_b.size(); ++i) b_param.value.grad[i] += d_b.data[i];

    Tensor d_feat({in_points, std::max<std::size_t>(feat, 1)});
    if (feat == 0) return d_feat;
    for (std::size_t g = 0; g < centers; ++g) {
        for (std::size_t t = 0; t < kk; ++t) {
            const std::size_t point = ctx.groups[g][t];
            const double* src = &d_inputs.data[(g * kk + t) * in_width + 3];
            double* dst = &d_feat.data[point * feat];
            for (std::size_t i = 0; i < feat; ++i) dst[i] += src[i];
        }
    }
    return d_feat;
}

}  // namespace

TokenSequence PointCloudTokenizer::tokenize(const Tensor& points, PointTokenizerCtx* ctx) const {
    require_cloud(points, "tokenize_point_cloud");
    const std::size_t p = points.rows();
    const std::size_t feat = points.cols() - 3;
    if (feat != feature_dim_) {
        throw ShapeError("tokenize_point_cloud: configured for " + std::to_string(feature_dim_) +
                         " features, got " + std::to_string(feat));
    }
    if (p % 16 != 0 || p / 16 < 1) {
        throw ShapeError("tokenize_point_cloud: P = " + std::to_string(p) +
                         " must be a positive multiple of 16");
    }
    PointTokenizerCtx local;
    PointTokenizerCtx* c = ctx ? ctx : &local;
    c->feature_dim = feature_dim_;

    const Tensor mid = run_stage(points, p / 4, k_, w1_->value, b1_->value, &c->stage1);
    const Tensor out = run_stage(mid, p / 16, k_, w2_->value, b2_->value, &c->stage2);

    TokenSequence seq;
    seq.modality = Modality::point_cloud;
    seq.embeddings = Tensor({p / 16, dim_});
    for (std::size_t i = 0; i < p / 16; ++i) {
        const double* src = &out.data[i * (3 + dim_) + 3];
        std::copy(src, src + dim_, &seq.embeddings.data[i * dim_]);
    }
    return seq;
}

void PointCloudTokenizer::backward(const PointTokenizerCtx& ctx, const Tensor& d_tokens) {
    const std::size_t stage1_points = ctx.stage1.centers.size();
    const Tensor d_mid_feat =
        stage_backward(ctx.stage2, stage1_points, w2_->value, *w2_, *b2_, d_tokens);
    // stage-1 token features became stage-2 input features; coords carry nothing
    const std::size_t p = ctx.stage1.groups.empty()
                              ? 0
                              : stage1_points * 4;  // stage 1 sampled P/4 centers from P points
    stage_backward(ctx.stage1, p, w1_->value, *w1_, *b1_, d_mid_feat);
}

}  // namespace mmt
