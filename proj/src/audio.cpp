#include "mmt/audio.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mmt/init.hpp"
#include "mmt/ops.hpp"

namespace mmt {

namespace {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

std::vector<double> mel_points(std::size_t mel_bins, double sample_rate, double fmin,
                               double fmax) {
    if (fmax <= 0.0) fmax = sample_rate / 2.0;
    if (fmin < 0.0 || fmax <= fmin) {
        throw ConfigError("mel filterbank: bad frequency range");
    }
    const double mel_lo = hz_to_mel(fmin);
    const double mel_hi = hz_to_mel(fmax);
    std::vector<double> pts(mel_bins + 2);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        pts[i] = mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                              static_cast<double>(mel_bins + 1);
    }
    return pts;
}

}  // namespace

void fft_radix2(std::vector<double>& re, std::vector<double>& im) {
    const std::size_t n = re.size();
    if (n == 0 || (n & (n - 1)) != 0 || im.size() != n) {
        throw ArgumentError("fft: size must be a power of two");
    }
    // bit-reversal permutation
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) {
            std::swap(re[i], re[j]);
            std::swap(im[i], im[j]);
        }
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double angle = -2.0 * std::numbers::pi / static_cast<double>(len);
        const double wr = std::cos(angle), wi = std::sin(angle);
        for (std::size_t i = 0; i < n; i += len) {
            double cur_r = 1.0, cur_i = 0.0;
            for (std::size_t j = 0; j < len / 2; ++j) {
                const std::size_t a = i + j, b = i + j + len / 2;
                const double tr = re[b] * cur_r - im[b] * cur_i;
                const double ti = re[b] * cur_i + im[b] * cur_r;
                re[b] = re[a] - tr;
                im[b] = im[a] - ti;
                re[a] += tr;
                im[a] += ti;
                const double nr = cur_r * wr - cur_i * wi;
                cur_i = cur_r * wi + cur_i * wr;
                cur_r = nr;
            }
        }
    }
}

std::vector<double> mel_center_frequencies(std::size_t mel_bins, double sample_rate, double fmin,
                                           double fmax) {
    const std::vector<double> pts = mel_points(mel_bins, sample_rate, fmin, fmax);
    std::vector<double> centers(mel_bins);
    for (std::size_t i = 0; i < mel_bins; ++i) centers[i] = mel_to_hz(pts[i + 1]);
    return centers;
}

Tensor mel_filterbank(std::size_t mel_bins, std::size_t fft_size, double sample_rate, double fmin,
                      double fmax) {
    if (mel_bins == 0) throw ConfigError("mel filterbank: need at least one bin");
    const std::vector<double> pts = mel_points(mel_bins, sample_rate, fmin, fmax);
    const std::size_t bins = fft_size / 2 + 1;
    Tensor fb({mel_bins, bins});
    for (std::size_t m = 0; m < mel_bins; ++m) {
        const double lo = mel_to_hz(pts[m]);
        const double center = mel_to_hz(pts[m + 1]);
        const double hi = mel_to_hz(pts[m + 2]);
        for (std::size_t k = 0; k < bins; ++k) {
            const double freq = static_cast<double>(k) * sample_rate / static_cast<double>(fft_size);
            double w = 0.0;
            if (freq > lo && freq < center) {
                w = (freq - lo) / (center - lo);
            } else if (freq >= center && freq < hi) {
                w = (hi - freq) / (hi - center);
            }
            fb(m, k) = w;
        }
    }
    return fb;
}

Tensor compute_log_mel_spectrogram(const AudioInput& input, const SpectrogramSpec& spec) {
    if (input.samples.empty()) throw DataError("spectrogram: empty waveform");
    if (input.sample_rate <= 0.0) throw DataError("spectrogram: non-positive sample rate");
    const std::size_t window =
        static_cast<std::size_t>(std::lround(spec.window_ms * input.sample_rate / 1000.0));
    const std::size_t hop =
        static_cast<std::size_t>(std::lround(spec.stride_ms * input.sample_rate / 1000.0));
    if (window == 0 || hop == 0) throw ConfigError("spectrogram: window and stride must be positive");
    if (input.samples.size() < window) {
        throw DataError("spectrogram: waveform of " + std::to_string(input.samples.size()) +
                        " samples is shorter than one " + std::to_string(window) +
                        "-sample window");
    }

    const std::size_t frames = input.samples.size() / hop;  // T = floor(t / t_s)
    const std::size_t fft_size = next_pow2(window);
    const std::size_t bins = fft_size / 2 + 1;
    const Tensor fb = mel_filterbank(spec.mel_bins, fft_size, input.sample_rate, spec.fmin,
                                     spec.fmax);

    std::vector<double> hamming(window);
    for (std::size_t i = 0; i < window; ++i) {
        hamming[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                            static_cast<double>(window - 1));
    }

    Tensor out({frames, spec.mel_bins});
    std::vector<double> re(fft_size), im(fft_size), mag(bins);
    for (std::size_t f = 0; f < frames; ++f) {
        const std::size_t start = f * hop;
        std::fill(re.begin(), re.end(), 0.0);
        std::fill(im.begin(), im.end(), 0.0);
        for (std::size_t i = 0; i < window; ++i) {
            const std::size_t idx = start + i;
            re[i] = idx < input.samples.size() ? input.samples[idx] * hamming[i] : 0.0;
        }
        fft_radix2(re, im);
        for (std::size_t k = 0; k < bins; ++k) mag[k] = std::hypot(re[k], im[k]);
        for (std::size_t m = 0; m < spec.mel_bins; ++m) {
            double energy = 0.0;
            const double* weights = &fb.data[m * bins];
            for (std::size_t k = 0; k < bins; ++k) energy += weights[k] * mag[k];
            out(f, m) = std::log(energy + spec.log_floor);
        }
    }
    return out;
}

std::size_t AudioTokenizer::axis_positions(std::size_t extent, std::size_t patch,
                                           std::size_t stride) {
    if (extent < patch) return 0;
    return (extent - patch) / stride + 1;
}

std::size_t AudioTokenizer::default_freq_stride(std::size_t mel_bins) {
    return std::max<std::size_t>(1, mel_bins / 12);
}

AudioTokenizer::AudioTokenizer(std::size_t patch, std::size_t time_stride, std::size_t freq_stride,
                               std::size_t dim, std::size_t n_max, ParameterSet& params, Rng& rng)
    : patch_(patch), time_stride_(time_stride), freq_stride_(freq_stride), dim_(dim) {
    if (patch == 0 || time_stride == 0 || freq_stride == 0) {
        throw ConfigError("audio tokenizer: patch and strides must be positive");
    }
    w_ = &params.create("tok.audio.proj.w", init_weight({patch * patch, dim}, rng));
    b_ = &params.create("tok.audio.proj.b", init_zeros({dim}));
    pos_ = &params.create("tok.audio.pos", init_weight({n_max + 1, dim}, rng));
    cls_ = &params.create("tok.audio.cls", init_weight({1, dim}, rng));
}

TokenSequence AudioTokenizer::tokenize(const Tensor& spectrogram, PatchProjCtx* ctx) const {
    if (spectrogram.rank() != 2) {
        throw ShapeError("tokenize_audio: expected T x F spectrogram, got " +
                         spectrogram.shape_string());
    }
    const std::size_t t = spectrogram.rows(), f = spectrogram.cols();
    if (t < patch_ || f < patch_) {
        throw ShapeError("tokenize_audio: spectrogram " + spectrogram.shape_string() +
                         " smaller than one " + std::to_string(patch_) + "x" +
                         std::to_string(patch_) + " patch");
    }
    const std::size_t time_pos = axis_positions(t, patch_, time_stride_);
    const std::size_t freq_pos = axis_positions(f, patch_, freq_stride_);
    const std::size_t patch_len = patch_ * patch_;
    Tensor patches({freq_pos * time_pos, patch_len});
    // frequency rows outer, time positions inner; patch flattened (time, freq)
    for (std::size_t fr = 0; fr < freq_pos; ++fr) {
        for (std::size_t tp = 0; tp < time_pos; ++tp) {
            double* out = &patches.data[(fr * time_pos + tp) * patch_len];
            std::size_t k = 0;
            for (std::size_t dt = 0; dt < patch_; ++dt) {
                const double* src = &spectrogram.data[(tp * time_stride_ + dt) * f +
                                                      fr * freq_stride_];
                for (std::size_t df = 0; df < patch_; ++df) out[k++] = src[df];
            }
        }
    }
    TokenSequence seq;
    seq.modality = Modality::audio;
    seq.embeddings = linear(patches, w_->value, b_->value);
    if (ctx) ctx->patches = std::move(patches);
    return seq;
}

void AudioTokenizer::backward(const PatchProjCtx& ctx, const Tensor& d_tokens) {
    w_->value.ensure_grad();
    b_->value.ensure_grad();
    Tensor d_w(w_->value.shape);
    Tensor d_b(b_->value.shape);
    linear_backward(ctx.patches, w_->value, d_tokens, nullptr, &d_w, &d_b);
    for (std::size_t i = 0; i < d_w.size(); ++i) w_->value.grad[i] += d_w.data[i];
    for (std::size_t i = 0; i < d_b.size(); ++i) b_->value.grad[i] += d_b.data[i];
}

}  // namespace mmt
