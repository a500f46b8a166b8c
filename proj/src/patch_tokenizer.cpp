#include "mmt/patch_tokenizer.hpp"

#include "mmt/init.hpp"
#include "mmt/ops.hpp"

namespace mmt {

namespace {

TokenSequence project_patches(Tensor patches, const Parameter& w, const Parameter& b,
                              Modality tag, PatchProjCtx* ctx) {
    TokenSequence seq;
    seq.modality = tag;
    seq.embeddings = linear(patches, w.value, b.value);
    if (ctx) ctx->patches = std::move(patches);
    return seq;
}

void patch_proj_backward(const PatchProjCtx& ctx, const Tensor& d_tokens, Parameter& w,
                         Parameter& b) {
    w.value.ensure_grad();
    b.value.ensure_grad();
    Tensor d_w(w.value.shape);
    Tensor d_b(b.value.shape);
    linear_backward(ctx.patches, w.value, d_tokens, nullptr, &d_w, &d_b);
    for (std::size_t i = 0; i < d_w.size(); ++i) w.value.grad[i] += d_w.data[i];
    for (std::size_t i = 0; i < d_b.size(); ++i) b.value.grad[i] += d_b.data[i];
}

}  // namespace

ImageTokenizer::ImageTokenizer(std::size_t channels, std::size_t patch, std::size_t dim,
                               std::size_t n_max, ParameterSet& params, Rng& rng)
    : channels_(channels), patch_(patch), dim_(dim) {
    if (patch == 0) throw ConfigError("image tokenizer: patch size must be positive");
    const std::size_t patch_len = patch * patch * channels;
    w_ = &params.create("tok.image.proj.w", init_weight({patch_len, dim}, rng));
    b_ = &params.create("tok.image.proj.b", init_zeros({dim}));
    pos_ = &params.create("tok.image.pos", init_weight({n_max + 1, dim}, rng));
    cls_ = &params.create("tok.image.cls", init_weight({1, dim}, rng));
}

TokenSequence ImageTokenizer::tokenize(const Tensor& pixels, Modality tag,
                                       PatchProjCtx* ctx) const {
    if (pixels.rank() != 3) {
        throw ShapeError("tokenize_image: expected C x H x W input, got " + pixels.shape_string());
    }
    const std::size_t c = pixels.shape[0], h = pixels.shape[1], w = pixels.shape[2];
    if (c != channels_) {
        throw ShapeError("tokenize_image: configured for " + std::to_string(channels_) +
                         " channels, got " + std::to_string(c));
    }
    if (h % patch_ != 0 || w % patch_ != 0) {
        throw ShapeError("tokenize_image: " + std::to_string(h) + "x" + std::to_string(w) +
                         " not divisible by patch size " + std::to_string(patch_));
    }
    if (tag != Modality::image && tag != Modality::infrared && tag != Modality::xray) {
        throw ConfigError(std::string("tokenize_image: modality tag '") + to_string(tag) +
                          "' does not route through the image tokenizer");
    }
    const std::size_t rows_p = h / patch_, cols_p = w / patch_;
    const std::size_t patch_len = patch_ * patch_ * channels_;
    Tensor patches({rows_p * cols_p, patch_len});
    // row-major patch order; within a patch: channel, then row, then col
    for (std::size_t pr = 0; pr < rows_p; ++pr) {
        for (std::size_t pc = 0; pc < cols_p; ++pc) {
            double* out = &patches.data[(pr * cols_p + pc) * patch_len];
            std::size_t k = 0;
            for (std::size_t ch = 0; ch < c; ++ch) {
                for (std::size_t dy = 0; dy < patch_; ++dy) {
                    const std::size_t y = pr * patch_ + dy;
                    const double* src = &pixels.data[(ch * h + y) * w + pc * patch_];
                    for (std::size_t dx = 0; dx < patch_; ++dx) out[k++] = src[dx];
                }
            }
        }
    }
    return project_patches(std::move(patches), *w_, *b_, tag, ctx);
}

void ImageTokenizer::backward(const PatchProjCtx& ctx, const Tensor& d_tokens) {
    patch_proj_backward(ctx, d_tokens, *w_, *b_);
}

VideoTokenizer::VideoTokenizer(std::size_t channels, std::size_t patch_t, std::size_t patch,
                               std::size_t dim, std::size_t n_max, ParameterSet& params, Rng& rng)
    : channels_(channels), patch_t_(patch_t), patch_(patch), dim_(dim) {
    if (patch == 0 || patch_t == 0) throw ConfigError("video tokenizer: patch sizes must be positive");
    const std::size_t patch_len = patch_t * patch * patch * channels;
    w_ = &params.create("tok.video.proj.w", init_weight({patch_len, dim}, rng));
    b_ = &params.create("tok.video.proj.b", init_zeros({dim}));
    pos_ = &params.create("tok.video.pos", init_weight({n_max + 1, dim}, rng));
    cls_ = &params.create("tok.video.cls", init_weight({1, dim}, rng));
}

TokenSequence VideoTokenizer::tokenize(const Tensor& frames, PatchProjCtx* ctx) const {
    if (frames.rank() != 4) {
        throw ShapeError("tokenize_video: expected Frames x C x H x W input, got " +
                         frames.shape_string());
    }
    const std::size_t f = frames.shape[0], c = frames.shape[1];
    const std::size_t h = frames.shape[2], w = frames.shape[3];
    if (c != channels_) {
        throw ShapeError("tokenize_video: configured for " + std::to_string(channels_) +
                         " channels, got " + std::to_string(c));
    }
    if (f % patch_t_ != 0 || h % patch_ != 0 || w % patch_ != 0) {
        throw ShapeError("tokenize_video: extents " + frames.shape_string() +
                         " not divisible by patches " + std::to_string(patch_t_) + "/" +
                         std::to_string(patch_));
    }
    const std::size_t tubes_t = f / patch_t_, rows_p = h / patch_, cols_p = w / patch_;
    const std::size_t patch_len = patch_t_ * patch_ * patch_ * channels_;
    Tensor patches({tubes_t * rows_p * cols_p, patch_len});
    for (std::size_t pt = 0; pt < tubes_t; ++pt) {
        for (std::size_t pr = 0; pr < rows_p; ++pr) {
            for (std::size_t pc = 0; pc < cols_p; ++pc) {
                double* out = &patches.data[((pt * rows_p + pr) * cols_p + pc) * patch_len];
                std::size_t k = 0;
                for (std::size_t dt = 0; dt < patch_t_; ++dt) {
                    const std::size_t fr = pt * patch_t_ + dt;
                    for (std::size_t ch = 0; ch < c; ++ch) {
                        for (std::size_t dy = 0; dy < patch_; ++dy) {
                            const std::size_t y = pr * patch_ + dy;
                            const double* src = &frames.data[((fr * c + ch) * h + y) * w + pc * patch_];
                            for (std::size_t dx = 0; dx < patch_; ++dx) out[k++] = src[dx];
                        }
                    }
                }
            }
        }
    }
    return project_patches(std::move(patches), *w_, *b_, Modality::video, ctx);
}

void VideoTokenizer::backward(const PatchProjCtx& ctx, const Tensor& d_tokens) {
    patch_proj_backward(ctx, d_tokens, *w_, *b_);
}

HyperspectralTokenizer::HyperspectralTokenizer(std::size_t bands, std::size_t dim,
                                               std::size_t n_max, ParameterSet& params, Rng& rng)
    : bands_(bands), dim_(dim) {
    if (bands == 0) throw ConfigError("hyperspectral tokenizer: bands must be positive");
    w_ = &params.create("tok.hyper.proj.w", init_weight({bands, dim}, rng));
    b_ = &params.create("tok.hyper.proj.b", init_zeros({dim}));
    pos_ = &params.create("tok.hyper.pos", init_weight({n_max + 1, dim}, rng));
    cls_ = &params.create("tok.hyper.cls", init_weight({1, dim}, rng));
}

TokenSequence HyperspectralTokenizer::tokenize(const Tensor& cube, PatchProjCtx* ctx) const {
    if (cube.rank() != 3) {
        throw ShapeError("tokenize_hyperspectral: expected H x W x Bands input, got " +
                         cube.shape_string());
    }
    const std::size_t h = cube.shape[0], w = cube.shape[1], bands = cube.shape[2];
    if (bands != bands_) {
        throw ShapeError("tokenize_hyperspectral: configured for " + std::to_string(bands_) +
                         " bands, got " + std::to_string(bands));
    }
    // H x W x Bands is already one Bands-vector per pixel in row-major order.
    Tensor patches({h * w, bands}, cube.data);
    return project_patches(std::move(patches), *w_, *b_, Modality::hyperspectral, ctx);
}

void HyperspectralTokenizer::backward(const PatchProjCtx& ctx, const Tensor& d_tokens) {
    patch_proj_backward(ctx, d_tokens, *w_, *b_);
}

}  // namespace mmt
