#pragma once

#include <string>
#include <variant>

#include "mmt/params.hpp"
#include "mmt/tensor.hpp"

namespace mmt {

enum class Modality {
    text,
    image,
    point_cloud,
    audio,
    video,
    infrared,
    xray,
    hyperspectral,
    fused,
};

const char* to_string(Modality m);
Modality modality_from_string(const std::string& name);

// n x D embedding matrix tagged with its source modality; the shared
// currency between every tokenizer and the encoder.
struct TokenSequence {
    Tensor embeddings;
    Modality modality = Modality::image;

    std::size_t count() const { return embeddings.rows(); }
    std::size_t dim() const { return embeddings.cols(); }
    void validate() const;  // n >= 1, finite
};

// Stack b's rows below a's; result is tagged fused.
TokenSequence concat_sequences(const TokenSequence& a, const TokenSequence& b);

// z0 = [cls; tokens] + pos[0..n], where pos is (n_max+1) x D and cls 1 x D.
Tensor add_position_embeddings(const TokenSequence& seq, const Parameter& pos,
                               const Parameter& cls);
// Accumulates into pos.grad and cls.grad; d_tokens (n x D) must be allocated.
void add_position_embeddings_backward(const Tensor& d_z0, Parameter& pos, Parameter& cls,
                                      Tensor& d_tokens);

// Raw per-modality inputs as the training loop and CLI see them.
struct TextSample {
    std::string text;
};
struct ImageSample {
    Tensor pixels;  // C x H x W
    Modality tag = Modality::image;  // image | infrared | xray
};
struct PointCloudSample {
    Tensor points;  // P x (3+c)
};
struct AudioSample {
    Tensor spectrogram;  // T x F, precomputed log-Mel
};
struct VideoSample {
    Tensor frames;  // Frames x C x H x W
};
struct HyperspectralSample {
    Tensor cube;  // H x W x Bands
};
struct FusedSample {
    Tensor pixels;       // C x H x W
    Tensor spectrogram;  // T x F
};

using Sample = std::variant<TextSample, ImageSample, PointCloudSample, AudioSample, VideoSample,
                            HyperspectralSample, FusedSample>;

struct LabeledSample {
    Sample input;
    int label = 0;
};

struct Dataset {
    std::vector<LabeledSample> items;
    std::size_t classes = 0;
};

}  // namespace mmt
