#pragma once

#include <any>
#include <cstdint>
#include <span>

#include "mmt/audio.hpp"
#include "mmt/encoder.hpp"
#include "mmt/optim.hpp"
#include "mmt/patch_tokenizer.hpp"
#include "mmt/point_tokenizer.hpp"
#include "mmt/text_tokenizer.hpp"
#include "mmt/tokens.hpp"

namespace mmt {

// Per-sample record of one forward pass, consumed by the backward pass.
struct ForwardTrace {
    std::any tok_ctx;
    std::size_t token_count = 0;
    EncodeCtx encode;
};

// Uniform face a training loop sees for one modality: tokenize a raw
// sample, and push token gradients back into the tokenizer's parameters.
class ModalityAdapter {
public:
    virtual ~ModalityAdapter() = default;
    virtual Modality modality() const = 0;
    virtual TokenSequence tokenize(const Sample& sample, ForwardTrace* trace) const = 0;
    virtual void tokenize_backward(ForwardTrace& trace, const Tensor& d_tokens) = 0;
    virtual Parameter& pos() = 0;
    virtual Parameter& cls() = 0;
};

class TextAdapter final : public ModalityAdapter {
public:
    explicit TextAdapter(TextTokenizer& tok) : tok_(&tok) {}
    Modality modality() const override { return Modality::text; }
    TokenSequence tokenize(const Sample& sample, ForwardTrace* trace) const override;
    void tokenize_backward(ForwardTrace& trace, const Tensor& d_tokens) override;
    Parameter& pos() override { return tok_->pos(); }
    Parameter& cls() override { return tok_->cls(); }

private:
    TextTokenizer* tok_;
};

class ImageAdapter final : public ModalityAdapter {
public:
    explicit ImageAdapter(ImageTokenizer& tok) : tok_(&tok) {}
    Modality modality() const override { return Modality::image; }
    TokenSequence tokenize(const Sample& sample, ForwardTrace* trace) const override;
    void tokenize_backward(ForwardTrace& trace, const Tensor& d_tokens) override;
    Parameter& pos() override { return tok_->pos(); }
    Parameter& cls() override { return tok_->cls(); }

private:
    ImageTokenizer* tok_;
};

class PointCloudAdapter final : public ModalityAdapter {
public:
    explicit PointCloudAdapter(PointCloudTokenizer& tok) : tok_(&tok) {}
    Modality modality() const override { return Modality::point_cloud; }
    TokenSequence tokenize(const Sample& sample, ForwardTrace* trace) const override;
    void tokenize_backward(ForwardTrace& trace, const Tensor& d_tokens) override;
    Parameter& pos() override { return tok_->pos(); }
    Parameter& cls() override { return tok_->cls(); }

private:
    PointCloudTokenizer* tok_;
};

class AudioAdapter final : public ModalityAdapter {
public:
    explicit AudioAdapter(AudioTokenizer& tok) : tok_(&tok) {}
    Modality modality() const override { return Modality::audio; }
    TokenSequence tokenize(const Sample& sample, ForwardTrace* trace) const override;
    void tokenize_backward(ForwardTrace& trace, const Tensor& d_tokens) override;
    Parameter& pos() override { return tok_->pos(); }
    Parameter& cls() override { return tok_->cls(); }

private:
    AudioTokenizer* tok_;
};

class VideoAdapter final : public ModalityAdapter {
public:
    explicit VideoAdapter(VideoTokenizer& tok) : tok_(&tok) {}
    Modality modality() const override { return Modality::video; }
    TokenSequence tokenize(const Sample& sample, ForwardTrace* trace) const override;
    void tokenize_backward(ForwardTrace& trace, const Tensor& d_tokens) override;
    Parameter& pos() override { return tok_->pos(); }
    Parameter& cls() override { return tok_->cls(); }

private:
    VideoTokenizer* tok_;
};

class HyperspectralAdapter final : public ModalityAdapter {
public:
    explicit HyperspectralAdapter(HyperspectralTokenizer& tok) : tok_(&tok) {}
    Modality modality() const override { return Modality::hyperspectral; }
    TokenSequence tokenize(const Sample& sample, ForwardTrace* trace) const override;
    void tokenize_backward(ForwardTrace& trace, const Tensor& d_tokens) override;
    Parameter& pos() override { return tok_->pos(); }
    Parameter& cls() override { return tok_->cls(); }

private:
    HyperspectralTokenizer* tok_;
};

// Visual and audio token sequences concatenated after tokenization; owns
// the fused sequence's position and CLS embeddings.
class FusedAdapter final : public ModalityAdapter {
public:
    FusedAdapter(ImageTokenizer& image, AudioTokenizer& audio, std::size_t dim, std::size_t n_max,
                 ParameterSet& params, Rng& rng);
    Modality modality() const override { return Modality::fused; }
    TokenSequence tokenize(const Sample& sample, ForwardTrace* trace) const override;
    void tokenize_backward(ForwardTrace& trace, const Tensor& d_tokens) override;
    Parameter& pos() override { return *pos_; }
    Parameter& cls() override { return *cls_; }

private:
    ImageTokenizer* image_;
    AudioTokenizer* audio_;
    Parameter *pos_, *cls_;
};

struct HeadCtx {
    Tensor input;  // B x D features
    LayerNormCtx ln;
    Tensor normed;
    Tensor hidden_pre, hidden_act;  // only for the MLP variant
};

// LN -> linear(D -> K) probe; optional one-hidden-layer MLP variant
// (LN -> linear(D -> H) -> GELU -> linear(H -> K)).
class ClassificationHead {
public:
    ClassificationHead(const std::string& task, std::size_t dim, std::size_t classes,
                       ParameterSet& params, Rng& rng, std::size_t hidden_dim = 0);

    Tensor forward(const Tensor& features, HeadCtx* ctx = nullptr) const;
    void backward(const HeadCtx& ctx, const Tensor& d_logits, Tensor& d_features);

    std::size_t classes() const { return classes_; }
    std::size_t dim() const { return dim_; }

private:
    std::size_t dim_, classes_, hidden_dim_;
    Parameter *ln_g_, *ln_b_;
    Parameter *hidden_w_ = nullptr, *hidden_b_ = nullptr;
    Parameter *out_w_, *out_b_;
};

// One task = tokenizer adapter + shared encoder + head. `pooled` selects
// mean pooling over final token rows (CLS row excluded) instead of the
// CLS summary.
struct TaskModel {
    ModalityAdapter* adapter = nullptr;
    Encoder* encoder = nullptr;
    ClassificationHead* head = nullptr;
    bool pooled = false;
};

struct BatchTrace {
    std::vector<ForwardTrace> samples;
    HeadCtx head;
    Tensor logits;
};

// Logits for a batch of same-modality samples; trace may be null for
// inference.
Tensor task_forward(const TaskModel& model, std::span<const Sample> batch, BatchTrace* trace);

// Forward + cross-entropy + full backward (head -> encoder -> tokenizer)
// + one optimizer step over the trainable parameters. Returns batch loss;
// batch_accuracy, when given, receives the pre-step argmax accuracy.
double train_step(TaskModel& model, std::span<const Sample> batch,
                  std::span<const int> labels, AdamOptimizer& optimizer,
                  double* batch_accuracy = nullptr);

struct EvalResult {
    double accuracy = 0.0;
    double mean_loss = 0.0;
};

// Pure evaluation pass; no parameter is touched.
EvalResult evaluate(const TaskModel& model, const Dataset& dataset);

struct StepMetric {
    std::size_t step;
    double loss;
    double accuracy;
};

struct TrainOptions {
    std::size_t steps = 200;
    std::size_t batch_size = 8;
    std::uint64_t seed = 0;  // batch-sampling stream
};

struct TrainRun {
    Modality modality;
    std::size_t steps = 0;
    std::size_t batch_size = 0;
    std::uint64_t seed = 0;
    std::vector<StepMetric> history;
    std::size_t trainable_params = 0;
};

// Uniform-with-replacement batch sampling driven by a forked Rng stream.
TrainRun run_training(TaskModel& model, const Dataset& train, AdamOptimizer& optimizer,
                      const TrainOptions& options);

std::size_t trainable_value_count(const std::vector<Parameter*>& params);

}  // namespace mmt
