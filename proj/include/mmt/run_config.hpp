#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mmt/audio.hpp"
#include "mmt/encoder.hpp"
#include "mmt/synthetic.hpp"

namespace mmt {

// Every knob a command reads. Defaults run the desk-scale experiment;
// a JSON config file can override any subset. Unknown keys are rejected
// and every field is validated before any compute starts.
struct RunConfig {
    std::string experiment = "transfer";
    std::uint64_t seed = 42;
    std::string out_dir = "runs/out";
    std::uint8_t precision = 64;

    EncoderConfig encoder;  // desk-scale defaults: L=2, h=4, D=64, mlp 256

    // tokenizers
    std::size_t image_patch = 4;
    std::size_t image_n_max = 64;
    std::size_t point_k = 8;
    std::size_t point_n_max = 128;
    std::size_t audio_patch = 16;
    std::size_t audio_time_stride = 10;
    std::size_t audio_freq_stride = 0;  // 0 = floor(mel_bins / 12)
    std::size_t audio_n_max = 160;
    SpectrogramSpec mel;
    std::size_t text_n_max = 32;
    std::string vocab_file;  // optional; otherwise built from the text task corpus
    std::size_t video_patch_t = 2;
    std::size_t video_patch = 4;
    std::size_t video_n_max = 128;
    std::size_t hyper_bands = 8;
    std::size_t hyper_n_max = 128;

    // training
    double lr = 2e-3;
    std::size_t batch = 8;
    std::size_t pretrain_steps = 500;
    std::size_t transfer_steps = 400;
    std::size_t fusion_steps = 300;

    // synthetic data; per_class counts cover train + heldout
    ImageTaskSpec images{};
    PointCloudTaskSpec point_clouds{};
    AudioTaskSpec audio{};
    TextTaskSpec text{};
    std::size_t test_per_class = 16;

    std::vector<std::string> transfer_modalities = {"point_cloud", "audio", "text"};
    bool run_fusion = true;

    void validate() const;
};

RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config(const std::string& json_text);

}  // namespace mmt
