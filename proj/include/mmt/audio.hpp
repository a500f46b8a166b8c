#pragma once

#include "mmt/patch_tokenizer.hpp"
#include "mmt/rng.hpp"
#include "mmt/tokens.hpp"

namespace mmt {

struct AudioInput {
    std::vector<double> samples;
    double sample_rate = 16000.0;

    double seconds() const {
        return static_cast<double>(samples.size()) / sample_rate;
    }
};

struct SpectrogramSpec {
    double window_ms = 25.0;
    double stride_ms = 10.0;   // the paper's t_s
    std::size_t mel_bins = 128;
    double fmin = 0.0;
    double fmax = 0.0;         // 0 = Nyquist
    double log_floor = 1e-10;  // added before the natural log
};

// Hamming-windowed frames at the configured stride, magnitude spectrum,
// triangular Mel filterbank, natural log of (energy + floor). Emits
// T = floor(duration / stride) frames; tail windows are zero-padded.
Tensor compute_log_mel_spectrogram(const AudioInput& input, const SpectrogramSpec& spec);

// Triangular Mel filterbank weights, filters x fft_bins. Exposed for tests.
Tensor mel_filterbank(std::size_t mel_bins, std::size_t fft_size, double sample_rate, double fmin,
                      double fmax);
// Center frequency (Hz) of each Mel filter.
std::vector<double> mel_center_frequencies(std::size_t mel_bins, double sample_rate, double fmin,
                                           double fmax);

// In-place radix-2 FFT over interleaved (re, im); size must be a power of two.
void fft_radix2(std::vector<double>& re, std::vector<double>& im);

// Overlapping S x S patches over a T x F spectrogram: time stride
// `time_stride` frames, frequency stride floor(F / 12) bins by default.
// Patch count per axis is floor((extent - S) / stride) + 1; each flattened
// patch is projected to D.
class AudioTokenizer {
public:
    AudioTokenizer(std::size_t patch, std::size_t time_stride, std::size_t freq_stride,
                   std::size_t dim, std::size_t n_max, ParameterSet& params, Rng& rng);

    TokenSequence tokenize(const Tensor& spectrogram, PatchProjCtx* ctx = nullptr) const;
    void backward(const PatchProjCtx& ctx, const Tensor& d_tokens);

    static std::size_t axis_positions(std::size_t extent, std::size_t patch, std::size_t stride);
    static std::size_t default_freq_stride(std::size_t mel_bins);

    std::size_t patch() const { return patch_; }
    std::size_t time_stride() const { return time_stride_; }
    std::size_t freq_stride() const { return freq_stride_; }
    Parameter& proj_weight() { return *w_; }
    Parameter& proj_bias() { return *b_; }
    Parameter& pos() { return *pos_; }
    Parameter& cls() { return *cls_; }

private:
    std::size_t patch_, time_stride_, freq_stride_, dim_;
    Parameter *w_, *b_, *pos_, *cls_;
};

}  // namespace mmt
