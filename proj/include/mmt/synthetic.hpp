#pragma once

#include <cstdint>

#include "mmt/audio.hpp"
#include "mmt/text_tokenizer.hpp"
#include "mmt/tokens.hpp"

namespace mmt {

// Synthetic, separable-by-construction datasets. Every generator is a
// pure function of (spec, seed). Each task ships a closed-form baseline
// that bounds how separable the generated classes are before any
// transformer enters the picture.

struct ImageTaskSpec {
    std::size_t classes = 4;  // square, circle, cross, stripes
    std::size_t per_class = 32;
    std::size_t size = 16;
    std::size_t channels = 1;
    double noise = 0.1;
    Modality tag = Modality::image;  // image | infrared | xray
};

Dataset gen_images(const ImageTaskSpec& spec, std::uint64_t seed);

struct PointCloudTaskSpec {
    std::size_t classes = 3;  // sphere, cube surface, two-cluster blobs
    std::size_t per_class = 32;
    std::size_t points = 1024;  // P, divisible by 16
    double jitter = 0.02;
    bool random_rotation = false;
};

Dataset gen_point_clouds(const PointCloudTaskSpec& spec, std::uint64_t seed);

struct AudioTaskSpec {
    std::size_t classes = 3;  // sine, square, chirp
    std::size_t per_class = 32;
    double seconds = 0.5;
    double sample_rate = 16000.0;
    std::vector<double> base_freqs = {440.0, 660.0, 990.0};
    double noise = 0.01;
};

struct LabeledWave {
    AudioInput input;
    int label = 0;
};

std::vector<LabeledWave> gen_audio_waveforms(const AudioTaskSpec& spec, std::uint64_t seed);
// Waveforms passed through the log-Mel front end once; samples carry
// spectrograms.
Dataset gen_audio(const AudioTaskSpec& spec, std::uint64_t seed, const SpectrogramSpec& mel);

struct TextTaskSpec {
    std::size_t classes = 3;
    std::size_t per_class = 48;
    std::size_t words_per_sentence = 8;
    std::size_t vocab_size = 256;
};

struct TextTaskData {
    Dataset dataset;
    Vocabulary vocab;
    std::vector<std::vector<std::string>> lexicons;  // per class
};

TextTaskData gen_text(const TextTaskSpec& spec, std::uint64_t seed);

// --- closed-form baselines -------------------------------------------------

// Multi-class averaged perceptron on raw pixel values; returns training
// accuracy after a few sweeps.
double image_linear_baseline(const Dataset& data, std::size_t sweeps = 10);

// Nearest class centroid on the per-cloud mean distance to the origin.
double point_cloud_centroid_baseline(const Dataset& data);

// Nearest class centroid on mean-over-time Mel energy vectors.
double audio_centroid_baseline(const Dataset& data);

// Majority lexicon-hit vote.
double text_bag_of_words_baseline(const Dataset& data,
                                  const std::vector<std::vector<std::string>>& lexicons);

// Index of the Mel bin with the highest total energy across frames.
std::size_t dominant_mel_bin(const Tensor& spectrogram);

}  // namespace mmt
