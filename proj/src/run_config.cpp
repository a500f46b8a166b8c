#include "mmt/run_config.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

namespace mmt {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::string& where,
                    const std::set<std::string>& allowed) {
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.contains(key)) {
            throw ConfigError("config: unknown key '" + where + key + "'");
        }
    }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("config: bad value for '" + std::string(key) + "': " + e.what());
    }
}

void parse_encoder(const json& obj, EncoderConfig& cfg) {
    reject_unknown(obj, "encoder.", {"depth", "heads", "dim", "mlp_dim", "n_max"});
    read(obj, "depth", cfg.depth);
    read(obj, "heads", cfg.heads);
    read(obj, "dim", cfg.dim);
    read(obj, "mlp_dim", cfg.mlp_dim);
    read(obj, "n_max", cfg.n_max);
}

void parse_tokenizers(const json& obj, RunConfig& cfg) {
    reject_unknown(obj, "tokenizers.",
                   {"image", "point_cloud", "audio", "text", "video", "hyperspectral"});
    if (obj.contains("image")) {
        const json& t = obj.at("image");
        reject_unknown(t, "tokenizers.image.", {"patch", "n_max"});
        read(t, "patch", cfg.image_patch);
        read(t, "n_max", cfg.image_n_max);
    }
    if (obj.contains("point_cloud")) {
        const json& t = obj.at("point_cloud");
        reject_unknown(t, "tokenizers.point_cloud.", {"k", "n_max"});
        read(t, "k", cfg.point_k);
        read(t, "n_max", cfg.point_n_max);
    }
    if (obj.contains("audio")) {
        const json& t = obj.at("audio");
        reject_unknown(t, "tokenizers.audio.",
                       {"patch", "time_stride", "freq_stride", "n_max", "window_ms", "stride_ms",
                        "mel_bins", "fmin", "fmax"});
        read(t, "patch", cfg.audio_patch);
        read(t, "time_stride", cfg.audio_time_stride);
        read(t, "freq_stride", cfg.audio_freq_stride);
        read(t, "n_max", cfg.audio_n_max);
        read(t, "window_ms", cfg.mel.window_ms);
        read(t, "stride_ms", cfg.mel.stride_ms);
        read(t, "mel_bins", cfg.mel.mel_bins);
        read(t, "fmin", cfg.mel.fmin);
        read(t, "fmax", cfg.mel.fmax);
    }
    if (obj.contains("text")) {
        const json& t = obj.at("text");
        reject_unknown(t, "tokenizers.text.", {"n_max", "vocab_file"});
        read(t, "n_max", cfg.text_n_max);
        read(t, "vocab_file", cfg.vocab_file);
    }
    if (obj.contains("video")) {
        const json& t = obj.at("video");
        reject_unknown(t, "tokenizers.video.", {"patch_t", "patch", "n_max"});
        read(t, "patch_t", cfg.video_patch_t);
        read(t, "patch", cfg.video_patch);
        read(t, "n_max", cfg.video_n_max);
    }
    if (obj.contains("hyperspectral")) {
        const json& t = obj.at("hyperspectral");
        reject_unknown(t, "tokenizers.hyperspectral.", {"bands", "n_max"});
        read(t, "bands", cfg.hyper_bands);
        read(t, "n_max", cfg.hyper_n_max);
    }
}

void parse_train(const json& obj, RunConfig& cfg) {
    reject_unknown(obj, "train.",
                   {"lr", "batch", "pretrain_steps", "transfer_steps", "fusion_steps"});
    read(obj, "lr", cfg.lr);
    read(obj, "batch", cfg.batch);
    read(obj, "pretrain_steps", cfg.pretrain_steps);
    read(obj, "transfer_steps", cfg.transfer_steps);
    read(obj, "fusion_steps", cfg.fusion_steps);
}

void parse_data(const json& obj, RunConfig& cfg) {
    reject_unknown(obj, "data.", {"images", "point_clouds", "audio", "text", "test_per_class"});
    if (obj.contains("images")) {
        const json& d = obj.at("images");
        reject_unknown(d, "data.images.", {"classes", "per_class", "size", "channels", "noise"});
        read(d, "classes", cfg.images.classes);
        read(d, "per_class", cfg.images.per_class);
        read(d, "size", cfg.images.size);
        read(d, "channels", cfg.images.channels);
        read(d, "noise", cfg.images.noise);
    }
    if (obj.contains("point_clouds")) {
        const json& d = obj.at("point_clouds");
        reject_unknown(d, "data.point_clouds.",
                       {"classes", "per_class", "points", "jitter", "random_rotation"});
        read(d, "classes", cfg.point_clouds.classes);
        read(d, "per_class", cfg.point_clouds.per_class);
        read(d, "points", cfg.point_clouds.points);
        read(d, "jitter", cfg.point_clouds.jitter);
        read(d, "random_rotation", cfg.point_clouds.random_rotation);
    }
    if (obj.contains("audio")) {
        const json& d = obj.at("audio");
        reject_unknown(d, "data.audio.",
                       {"classes", "per_class", "seconds", "sample_rate", "base_freqs", "noise"});
        read(d, "classes", cfg.audio.classes);
        read(d, "per_class", cfg.audio.per_class);
        read(d, "seconds", cfg.audio.seconds);
        read(d, "sample_rate", cfg.audio.sample_rate);
        read(d, "base_freqs", cfg.audio.base_freqs);
        read(d, "noise", cfg.audio.noise);
    }
    if (obj.contains("text")) {
        const json& d = obj.at("text");
        reject_unknown(d, "data.text.",
                       {"classes", "per_class", "words_per_sentence", "vocab_size"});
        read(d, "classes", cfg.text.classes);
        read(d, "per_class", cfg.text.per_class);
        read(d, "words_per_sentence", cfg.text.words_per_sentence);
        read(d, "vocab_size", cfg.text.vocab_size);
    }
    read(obj, "test_per_class", cfg.test_per_class);
}

}  // namespace

void RunConfig::validate() const {
    encoder.validate();
    if (precision != 32 && precision != 64) {
        throw ConfigError("config: precision must be 32 or 64");
    }
    if (experiment.empty()) throw ConfigError("config: experiment name must be non-empty");
    if (out_dir.empty()) throw ConfigError("config: out_dir must be non-empty");
    if (image_patch == 0 || images.size % image_patch != 0) {
        throw ConfigError("config: image size must be divisible by the image patch");
    }
    if (encoder.dim % 2 != 0) throw ConfigError("config: encoder dim must be even");
    if (point_clouds.points % 16 != 0 || point_clouds.points == 0) {
        throw ConfigError("config: point cloud P must be a positive multiple of 16");
    }
    if (point_k == 0) throw ConfigError("config: point KNN k must be positive");
    if (audio_patch == 0 || audio_time_stride == 0) {
        throw ConfigError("config: audio patch and time stride must be positive");
    }
    if (mel.mel_bins < audio_patch) {
        throw ConfigError("config: mel_bins must be at least the audio patch size");
    }
    if (lr <= 0.0) throw ConfigError("config: lr must be positive");
    if (batch == 0) throw ConfigError("config: batch must be positive");
    if (test_per_class == 0) throw ConfigError("config: test_per_class must be positive");
    if (images.per_class <= 1 || point_clouds.per_class == 0 || audio.per_class == 0 ||
        text.per_class == 0) {
        throw ConfigError("config: per_class counts must be positive");
    }
    for (const std::string& name : transfer_modalities) {
        const Modality m = modality_from_string(name);
        if (m != Modality::point_cloud && m != Modality::audio && m != Modality::text) {
            throw ConfigError("config: transfer modality '" + name +
                              "' is not one of point_cloud/audio/text");
        }
    }
}

RunConfig parse_run_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("config: top level must be an object");
    reject_unknown(root, "",
                   {"experiment", "seed", "out_dir", "precision", "encoder", "tokenizers",
                    "train", "data", "transfer_modalities", "run_fusion"});
    RunConfig cfg;
    read(root, "experiment", cfg.experiment);
    read(root, "seed", cfg.seed);
    read(root, "out_dir", cfg.out_dir);
    {
        std::size_t precision = cfg.precision;
        read(root, "precision", precision);
        cfg.precision = static_cast<std::uint8_t>(precision);
    }
    if (root.contains("encoder")) parse_encoder(root.at("encoder"), cfg.encoder);
    if (root.contains("tokenizers")) parse_tokenizers(root.at("tokenizers"), cfg);
    if (root.contains("train")) parse_train(root.at("train"), cfg);
    if (root.contains("data")) parse_data(root.at("data"), cfg);
    read(root, "transfer_modalities", cfg.transfer_modalities);
    read(root, "run_fusion", cfg.run_fusion);
    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_run_config(text);
}

}  // namespace mmt
