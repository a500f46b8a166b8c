#pragma once

#include "mmt/rng.hpp"
#include "mmt/tokens.hpp"

namespace mmt {

// Context shared by every flatten-then-project tokenizer: the patch matrix
// is the linear layer's input, which is all the backward pass needs.
struct PatchProjCtx {
    Tensor patches;  // n x patch_len
};

// Non-overlapping S x S patches of a C x H x W image, flattened in
// (channel, row, col) order and projected to D. Serves infrared and x-ray
// inputs unchanged; the tag only labels the output sequence.
class ImageTokenizer {
public:
    ImageTokenizer(std::size_t channels, std::size_t patch, std::size_t dim, std::size_t n_max,
                   ParameterSet& params, Rng& rng);

    TokenSequence tokenize(const Tensor& pixels, Modality tag = Modality::image,
                           PatchProjCtx* ctx = nullptr) const;
    void backward(const PatchProjCtx& ctx, const Tensor& d_tokens);

    std::size_t patch() const { return patch_; }
    std::size_t channels() const { return channels_; }
    Parameter& proj_weight() { return *w_; }
    Parameter& proj_bias() { return *b_; }
    Parameter& pos() { return *pos_; }
    Parameter& cls() { return *cls_; }

private:
    std::size_t channels_, patch_, dim_;
    Parameter *w_, *b_, *pos_, *cls_;
};

// Non-overlapping S_t x S x S tubes of a Frames x C x H x W clip,
// flattened in (frame, channel, row, col) order.
class VideoTokenizer {
public:
    VideoTokenizer(std::size_t channels, std::size_t patch_t, std::size_t patch,
                   std::size_t dim, std::size_t n_max, ParameterSet& params, Rng& rng);

    TokenSequence tokenize(const Tensor& frames, PatchProjCtx* ctx = nullptr) const;
    void backward(const PatchProjCtx& ctx, const Tensor& d_tokens);

    Parameter& proj_weight() { return *w_; }
    Parameter& proj_bias() { return *b_; }
    Parameter& pos() { return *pos_; }
    Parameter& cls() { return *cls_; }

private:
    std::size_t channels_, patch_t_, patch_, dim_;
    Parameter *w_, *b_, *pos_, *cls_;
};

// One token per pixel: the Bands-vector at each spatial position of an
// H x W x Bands cube is projected to D. No spatial patching.
class HyperspectralTokenizer {
public:
    HyperspectralTokenizer(std::size_t bands, std::size_t dim, std::size_t n_max,
                           ParameterSet& params, Rng& rng);

    TokenSequence tokenize(const Tensor& cube, PatchProjCtx* ctx = nullptr) const;
    void backward(const PatchProjCtx& ctx, const Tensor& d_tokens);

    Parameter& proj_weight() { return *w_; }
    Parameter& proj_bias() { return *b_; }
    Parameter& pos() { return *pos_; }
    Parameter& cls() { return *cls_; }

private:
    std::size_t bands_, dim_;
    Parameter *w_, *b_, *pos_, *cls_;
};

}  // namespace mmt
