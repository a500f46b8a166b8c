#include "mmt/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "mmt/rng.hpp"

namespace mmt {

namespace {

constexpr double kTau = 2.0 * std::numbers::pi;

double shape_pixel(std::size_t cls, std::size_t y, std::size_t x, std::size_t n) {
    const double cy = (static_cast<double>(n) - 1.0) / 2.0;
    const double cx = cy;
    switch (cls) {
        case 0: {  // filled square
            const std::size_t lo = n / 4, hi = n - n / 4;
            return (y >= lo && y < hi && x >= lo && x < hi) ? 1.0 : 0.0;
        }
        case 1: {  // disk
            const double dy = static_cast<double>(y) - cy;
            const double dx = static_cast<double>(x) - cx;
            const double r = static_cast<double>(n) / 3.0;
            return (dy * dy + dx * dx <= r * r) ? 1.0 : 0.0;
        }
        case 2: {  // cross
            const std::size_t arm = std::max<std::size_t>(1, n / 6);
            const std::size_t lo = (n - arm) / 2, hi = lo + arm;
            return ((y >= lo && y < hi) || (x >= lo && x < hi)) ? 1.0 : 0.0;
        }
        default: {  // horizontal stripes
            return ((y / 2) % 2 == 0) ? 1.0 : 0.0;
        }
    }
}

void rotate_cloud(Tensor& points, Rng& rng) {
    // random rotation about the z axis
    const double a = rng.uniform(0.0, kTau);
    const double c = std::cos(a), s = std::sin(a);
    const std::size_t w = points.cols();
    for (std::size_t i = 0; i < points.rows(); ++i) {
        double* p = &points.data[i * w];
        const double x = p[0], y = p[1];
        p[0] = c * x - s * y;
        p[1] = s * x + c * y;
    }
}

// Deterministic made-up content words: class-distinct consonant/vowel
// patterns so lexicons never collide.
std::vector<std::string> class_lexicon(std::size_t cls, std::size_t words) {
    static const char* consonants[] = {"br", "dr", "kl", "mn", "pr", "st", "tr", "vl"};
    static const char* vowels[] = {"a", "e", "i", "o", "u"};
    static const char* tails[] = {"ck", "ld", "mp", "nt", "rk", "sh", "st", "x"};
    std::vector<std::string> out;
    for (std::size_t w = 0; w < words; ++w) {
        std::string word = consonants[(cls * 3 + w) % 8];
        word += vowels[(cls + w) % 5];
        word += tails[(cls * 5 + 2 * w) % 8];
        word += vowels[(cls * 2 + w) % 5];
        out.push_back(word);
    }
    return out;
}

const std::vector<std::string>& function_words() {
    static const std::vector<std::string> words = {"the", "a",  "of", "and",
                                                   "to",  "is", "in", "it"};
    return words;
}

}  // namespace

Dataset gen_images(const ImageTaskSpec& spec, std::uint64_t seed) {
    if (spec.classes < 1 || spec.classes > 4) {
        throw ConfigError("gen_images: K must be in [1, 4] (square/circle/cross/stripes)");
    }
    if (spec.size < 4) throw ConfigError("gen_images: size must be >= 4");
    Rng root(seed);
    Dataset data;
    data.classes = spec.classes;
    for (std::size_t cls = 0; cls < spec.classes; ++cls) {
        for (std::size_t s = 0; s < spec.per_class; ++s) {
            Rng rng = root.fork(cls * spec.per_class + s);
            Tensor pixels({spec.channels, spec.size, spec.size});
            for (std::size_t ch = 0; ch < spec.channels; ++ch) {
                for (std::size_t y = 0; y < spec.size; ++y) {
                    for (std::size_t x = 0; x < spec.size; ++x) {
                        const double base = shape_pixel(cls, y, x, spec.size);
                        pixels.data[(ch * spec.size + y) * spec.size + x] =
                            base + spec.noise * rng.normal();
                    }
                }
            }
            data.items.push_back({ImageSample{std::move(pixels), spec.tag},
                                  static_cast<int>(cls)});
        }
    }
    return data;
}

Dataset gen_point_clouds(const PointCloudTaskSpec& spec, std::uint64_t seed) {
    if (spec.classes < 1 || spec.classes > 3) {
        throw ConfigError("gen_point_clouds: K must be in [1, 3] (sphere/cube/blobs)");
    }
    if (spec.points % 16 != 0 || spec.points == 0) {
        throw ConfigError("gen_point_clouds: P must be a positive multiple of 16");
    }
    Rng root(seed);
    Dataset data;
    data.classes = spec.classes;
    for (std::size_t cls = 0; cls < spec.classes; ++cls) {
        for (std::size_t s = 0; s < spec.per_class; ++s) {
            Rng rng = root.fork(cls * spec.per_class + s);
            Tensor points({spec.points, 3});
            for (std::size_t i = 0; i < spec.points; ++i) {
                double* p = &points.data[i * 3];
                switch (cls) {
                    case 0: {  // unit sphere surface
                        double v[3];
                        double norm = 0.0;
                        do {
                            norm = 0.0;
                            for (double& c : v) {
                                c = rng.normal();
                                norm += c * c;
                            }
                        } while (norm < 1e-12);
                        norm = std::sqrt(norm);
                        for (int k = 0; k < 3; ++k) p[k] = v[k] / norm;
                        break;
                    }
                    case 1: {  // cube surface, half-side 1
                        const std::size_t face = rng.uniform_int(6);
                        const double u = rng.uniform(-1.0, 1.0);
                        const double w = rng.uniform(-1.0, 1.0);
                        const double fixed = (face % 2 == 0) ? 1.0 : -1.0;
                        const std::size_t axis = face / 2;
                        p[axis] = fixed;
                        p[(axis + 1) % 3] = u;
                        p[(axis + 2) % 3] = w;
                        break;
                    }
                    default: {  // two gaussian blobs near the origin
                        const double cx = rng.uniform_int(2) == 0 ? 0.5 : -0.5;
                        p[0] = cx + 0.15 * rng.normal();
                        p[1] = 0.15 * rng.normal();
                        p[2] = 0.15 * rng.normal();
                        break;
                    }
                }
                for (int k = 0; k < 3; ++k) p[k] += spec.jitter * rng.normal();
            }
            if (spec.random_rotation) rotate_cloud(points, rng);
            data.items.push_back({PointCloudSample{std::move(points)}, static_cast<int>(cls)});
        }
    }
    return data;
}

std::vector<LabeledWave> gen_audio_waveforms(const AudioTaskSpec& spec, std::uint64_t seed) {
    if (spec.classes < 1 || spec.classes > 3) {
        throw ConfigError("gen_audio: K must be in [1, 3] (sine/square/chirp)");
    }
    if (spec.base_freqs.size() < spec.classes) {
        throw ConfigError("gen_audio: need one base frequency per class");
    }
    Rng root(seed);
    std::vector<LabeledWave> out;
    const std::size_t samples =
        static_cast<std::size_t>(std::lround(spec.seconds * spec.sample_rate));
    for (std::size_t cls = 0; cls < spec.classes; ++cls) {
        const double f0 = spec.base_freqs[cls];
        for (std::size_t s = 0; s < spec.per_class; ++s) {
            Rng rng = root.fork(cls * spec.per_class + s);
            const double phase = rng.uniform(0.0, kTau);
            AudioInput wave;
            wave.sample_rate = spec.sample_rate;
            wave.samples.resize(samples);
            for (std::size_t i = 0; i < samples; ++i) {
                const double t = static_cast<double>(i) / spec.sample_rate;
                double v = 0.0;
                switch (cls) {
                    case 0: v = std::sin(kTau * f0 * t + phase); break;
                    case 1: v = std::sin(kTau * f0 * t + phase) >= 0.0 ? 1.0 : -1.0; break;
                    default: {
                        // linear chirp f0 -> 2*f0 over the clip
                        const double rate = f0 / spec.seconds;
                        v = std::sin(kTau * (f0 * t + 0.5 * rate * t * t) + phase);
                        break;
                    }
                }
                wave.samples[i] = v + spec.noise * rng.normal();
            }
            out.push_back({std::move(wave), static_cast<int>(cls)});
        }
    }
    return out;
}

Dataset gen_audio(const AudioTaskSpec& spec, std::uint64_t seed, const SpectrogramSpec& mel) {
    Dataset data;
    data.classes = spec.classes;
    for (LabeledWave& wave : gen_audio_waveforms(spec, seed)) {
        data.items.push_back(
            {AudioSample{compute_log_mel_spectrogram(wave.input, mel)}, wave.label});
    }
    return data;
}

TextTaskData gen_text(const TextTaskSpec& spec, std::uint64_t seed) {
    if (spec.classes < 1 || spec.classes > 4) {
        throw ConfigError("gen_text: K must be in [1, 4]");
    }
    if (spec.words_per_sentence < 2) {
        throw ConfigError("gen_text: need at least 2 words per sentence");
    }
    Rng root(seed);
    TextTaskData out;
    out.dataset.classes = spec.classes;
    for (std::size_t cls = 0; cls < spec.classes; ++cls) {
        out.lexicons.push_back(class_lexicon(cls, 8));
    }
    std::vector<std::string> corpus;
    for (std::size_t cls = 0; cls < spec.classes; ++cls) {
        const auto& lexicon = out.lexicons[cls];
        for (std::size_t s = 0; s < spec.per_class; ++s) {
            Rng rng = root.fork(cls * spec.per_class + s);
            std::ostringstream sentence;
            for (std::size_t w = 0; w < spec.words_per_sentence; ++w) {
                if (w) sentence << ' ';
                // first and last words always come from the class lexicon
                const bool content = w == 0 || w + 1 == spec.words_per_sentence ||
                                     rng.uniform() < 0.5;
                if (content) {
                    sentence << lexicon[rng.uniform_int(lexicon.size())];
                } else {
                    sentence << function_words()[rng.uniform_int(function_words().size())];
                }
            }
            corpus.push_back(sentence.str());
            out.dataset.items.push_back({TextSample{corpus.back()}, static_cast<int>(cls)});
        }
    }
    out.vocab = Vocabulary::build(corpus, spec.vocab_size);
    return out;
}

double image_linear_baseline(const Dataset& data, std::size_t sweeps) {
    if (data.items.empty()) throw DataError("image_linear_baseline: empty dataset");
    const auto& first = std::get<ImageSample>(data.items[0].input);
    const std::size_t dim = first.pixels.size();
    const std::size_t k = data.classes;
    std::vector<double> w(k * (dim + 1), 0.0);  // +1 bias
    auto score = [&](std::size_t cls, const Tensor& pixels) {
        const double* wc = &w[cls * (dim + 1)];
        double acc = wc[dim];
        for (std::size_t i = 0; i < dim; ++i) acc += wc[i] * pixels.data[i];
        return acc;
    };
    auto predict = [&](const Tensor& pixels) {
        std::size_t best = 0;
        double best_score = score(0, pixels);
        for (std::size_t c = 1; c < k; ++c) {
            const double v = score(c, pixels);
            if (v > best_score) {
                best_score = v;
                best = c;
            }
        }
        return best;
    };
    for (std::size_t sweep = 0; sweep < sweeps; ++sweep) {
        for (const auto& item : data.items) {
            const auto& img = std::get<ImageSample>(item.input);
            const std::size_t guess = predict(img.pixels);
            const auto truth = static_cast<std::size_t>(item.label);
            if (guess != truth) {
                double* wt = &w[truth * (dim + 1)];
                double* wg = &w[guess * (dim + 1)];
                for (std::size_t i = 0; i < dim; ++i) {
                    wt[i] += img.pixels.data[i];
                    wg[i] -= img.pixels.data[i];
                }
                wt[dim] += 1.0;
                wg[dim] -= 1.0;
            }
        }
    }
    std::size_t hits = 0;
    for (const auto& item : data.items) {
        const auto& img = std::get<ImageSample>(item.input);
        if (predict(img.pixels) == static_cast<std::size_t>(item.label)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(data.items.size());
}

double point_cloud_centroid_baseline(const Dataset& data) {
    if (data.items.empty()) throw DataError("point_cloud_centroid_baseline: empty dataset");
    auto mean_radius = [](const Tensor& points) {
        double acc = 0.0;
        const std::size_t w = points.cols();
        for (std::size_t i = 0; i < points.rows(); ++i) {
            const double* p = &points.data[i * w];
            acc += std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
        }
        return acc / static_cast<double>(points.rows());
    };
    std::vector<double> centroid(data.classes, 0.0);
    std::vector<std::size_t> counts(data.classes, 0);
    for (const auto& item : data.items) {
        const auto& cloud = std::get<PointCloudSample>(item.input);
        centroid[static_cast<std::size_t>(item.label)] += mean_radius(cloud.points);
        ++counts[static_cast<std::size_t>(item.label)];
    }
    for (std::size_t c = 0; c < data.classes; ++c) {
        if (counts[c]) centroid[c] /= static_cast<double>(counts[c]);
    }
    std::size_t hits = 0;
    for (const auto& item : data.items) {
        const auto& cloud = std::get<PointCloudSample>(item.input);
        const double r = mean_radius(cloud.points);
        std::size_t best = 0;
        for (std::size_t c = 1; c < data.classes; ++c) {
            if (std::abs(r - centroid[c]) < std::abs(r - centroid[best])) best = c;
        }
        if (best == static_cast<std::size_t>(item.label)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(data.items.size());
}

double audio_centroid_baseline(const Dataset& data) {
    if (data.items.empty()) throw DataError("audio_centroid_baseline: empty dataset");
    const auto& first = std::get<AudioSample>(data.items[0].input);
    const std::size_t bins = first.spectrogram.cols();
    auto profile = [&](const Tensor& spec) {
        std::vector<double> mean(bins, 0.0);
        for (std::size_t t = 0; t < spec.rows(); ++t) {
            for (std::size_t f = 0; f < bins; ++f) mean[f] += spec(t, f);
        }
        for (double& v : mean) v /= static_cast<double>(spec.rows());
        return mean;
    };
    std::vector<std::vector<double>> centroids(data.classes, std::vector<double>(bins, 0.0));
    std::vector<std::size_t> counts(data.classes, 0);
    for (const auto& item : data.items) {
        const auto& spec = std::get<AudioSample>(item.input);
        const auto p = profile(spec.spectrogram);
        auto& c = centroids[static_cast<std::size_t>(item.label)];
        for (std::size_t f = 0; f < bins; ++f) c[f] += p[f];
        ++counts[static_cast<std::size_t>(item.label)];
    }
    for (std::size_t c = 0; c < data.classes; ++c) {
        if (counts[c]) {
            for (double& v : centroids[c]) v /= static_cast<double>(counts[c]);
        }
    }
    std::size_t hits = 0;
    for (const auto& item : data.items) {
        const auto& spec = std::get<AudioSample>(item.input);
        const auto p = profile(spec.spectrogram);
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < data.classes; ++c) {
            double d = 0.0;
            for (std::size_t f = 0; f < bins; ++f) {
                const double diff = p[f] - centroids[c][f];
                d += diff * diff;
            }
            if (d < best_d) {
                best_d = d;
                best = c;
            }
        }
        if (best == static_cast<std::size_t>(item.label)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(data.items.size());
}

double text_bag_of_words_baseline(const Dataset& data,
                                  const std::vector<std::vector<std::string>>& lexicons) {
    if (data.items.empty()) throw DataError("text_bag_of_words_baseline: empty dataset");
    std::size_t hits = 0;
    for (const auto& item : data.items) {
        const auto& text = std::get<TextSample>(item.input);
        std::istringstream in(text.text);
        std::vector<std::size_t> votes(lexicons.size(), 0);
        std::string word;
        while (in >> word) {
            for (std::size_t c = 0; c < lexicons.size(); ++c) {
                if (std::find(lexicons[c].begin(), lexicons[c].end(), word) !=
                    lexicons[c].end()) {
                    ++votes[c];
                }
            }
        }
        const std::size_t best = static_cast<std::size_t>(
            std::max_element(votes.begin(), votes.end()) - votes.begin());
        if (best == static_cast<std::size_t>(item.label)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(data.items.size());
}

std::size_t dominant_mel_bin(const Tensor& spectrogram) {
    const std::size_t bins = spectrogram.cols();
    std::vector<double> energy(bins, 0.0);
    for (std::size_t t = 0; t < spectrogram.rows(); ++t) {
        for (std::size_t f = 0; f < bins; ++f) energy[f] += spectrogram(t, f);
    }
    return static_cast<std::size_t>(std::max_element(energy.begin(), energy.end()) -
                                    energy.begin());
}

}  // namespace mmt
