#include "mmt/heads.hpp"

#include <algorithm>
#include <cmath>

#include "mmt/init.hpp"

namespace mmt {

namespace {

template <typename T>
const T& expect_sample(const Sample& sample, const char* who) {
    const T* typed = std::get_if<T>(&sample);
    if (!typed) {
        throw ConfigError(std::string(who) + ": sample type does not match the adapter modality");
    }
    return *typed;
}

}  // namespace

TokenSequence TextAdapter::tokenize(const Sample& sample, ForwardTrace* trace) const {
    const auto& s = expect_sample<TextSample>(sample, "text adapter");
    TextTokenizerCtx ctx;
    TokenSequence seq = tok_->tokenize(s.text, trace ? &ctx : nullptr);
    if (trace) trace->tok_ctx = std::move(ctx);
    return seq;
}

void TextAdapter::tokenize_backward(ForwardTrace& trace, const Tensor& d_tokens) {
    tok_->backward(std::any_cast<const TextTokenizerCtx&>(trace.tok_ctx), d_tokens);
}

TokenSequence ImageAdapter::tokenize(const Sample& sample, ForwardTrace* trace) const {
    const auto& s = expect_sample<ImageSample>(sample, "image adapter");
    PatchProjCtx ctx;
    TokenSequence seq = tok_->tokenize(s.pixels, s.tag, trace ? &ctx : nullptr);
    if (trace) trace->tok_ctx = std::move(ctx);
    return seq;
}

void ImageAdapter::tokenize_backward(ForwardTrace& trace, const Tensor& d_tokens) {
    tok_->backward(std::any_cast<const PatchProjCtx&>(trace.tok_ctx), d_tokens);
}

TokenSequence PointCloudAdapter::tokenize(const Sample& sample, ForwardTrace* trace) const {
    const auto& s = expect_sample<PointCloudSample>(sample, "point cloud adapter");
    PointTokenizerCtx ctx;
    TokenSequence seq = tok_->tokenize(s.points, trace ? &ctx : nullptr);
    if (trace) trace->tok_ctx = std::move(ctx);
    return seq;
}

void PointCloudAdapter::tokenize_backward(ForwardTrace& trace, const Tensor& d_tokens) {
    tok_->backward(std::any_cast<const PointTokenizerCtx&>(trace.tok_ctx), d_tokens);
}

TokenSequence AudioAdapter::tokenize(const Sample& sample, ForwardTrace* trace) const {
    const auto& s = expect_sample<AudioSample>(sample, "audio adapter");
    PatchProjCtx ctx;
    TokenSequence seq = tok_->tokenize(s.spectrogram, trace ? &ctx : nullptr);
    if (trace) trace->tok_ctx = std::move(ctx);
    return seq;
}

void AudioAdapter::tokenize_backward(ForwardTrace& trace, const Tensor& d_tokens) {
    tok_->backward(std::any_cast<const PatchProjCtx&>(trace.tok_ctx), d_tokens);
}

TokenSequence VideoAdapter::tokenize(const Sample& sample, ForwardTrace* trace) const {
    const auto& s = expect_sample<VideoSample>(sample, "video adapter");
    PatchProjCtx ctx;
    TokenSequence seq = tok_->tokenize(s.frames, trace ? &ctx : nullptr);
    if (trace) trace->tok_ctx = std::move(ctx);
    return seq;
}

void VideoAdapter::tokenize_backward(ForwardTrace& trace, const Tensor& d_tokens) {
    tok_->backward(std::any_cast<const PatchProjCtx&>(trace.tok_ctx), d_tokens);
}

TokenSequence HyperspectralAdapter::tokenize(const Sample& sample, ForwardTrace* trace) const {
    const auto& s = expect_sample<HyperspectralSample>(sample, "hyperspectral adapter");
    PatchProjCtx ctx;
    TokenSequence seq = tok_->tokenize(s.cube, trace ? &ctx : nullptr);
    if (trace) trace->tok_ctx = std::move(ctx);
    return seq;
}

void HyperspectralAdapter::tokenize_backward(ForwardTrace& trace, const Tensor& d_tokens) {
    tok_->backward(std::any_cast<const PatchProjCtx&>(trace.tok_ctx), d_tokens);
}

namespace {

struct FusedCtx {
    PatchProjCtx image;
    PatchProjCtx audio;
    std::size_t image_tokens = 0;
};

}  // namespace

FusedAdapter::FusedAdapter(ImageTokenizer& image, AudioTokenizer& audio, std::size_t dim,
                           std::size_t n_max, ParameterSet& params, Rng& rng)
    : image_(&image), audio_(&audio) {
    pos_ = &params.create("tok.fused.pos", init_weight({n_max + 1, dim}, rng));
    cls_ = &params.create("tok.fused.cls", init_weight({1, dim}, rng));
}

TokenSequence FusedAdapter::tokenize(const Sample& sample, ForwardTrace* trace) const {
    const auto& s = expect_sample<FusedSample>(sample, "fused adapter");
    FusedCtx ctx;
    const TokenSequence visual =
        image_->tokenize(s.pixels, Modality::image, trace ? &ctx.image : nullptr);
    const TokenSequence audio = audio_->tokenize(s.spectrogram, trace ? &ctx.audio : nullptr);
    ctx.image_tokens = visual.count();
    TokenSequence fused = concat_sequences(visual, audio);
    if (trace) trace->tok_ctx = std::move(ctx);
    return fused;
}

void FusedAdapter::tokenize_backward(ForwardTrace& trace, const Tensor& d_tokens) {
    const auto& ctx = std::any_cast<const FusedCtx&>(trace.tok_ctx);
    image_->backward(ctx.image, slice_rows(d_tokens, 0, ctx.image_tokens));
    audio_->backward(ctx.audio, slice_rows(d_tokens, ctx.image_tokens, d_tokens.rows()));
}

ClassificationHead::ClassificationHead(const std::string& task, std::size_t dim,
                                       std::size_t classes, ParameterSet& params, Rng& rng,
                                       std::size_t hidden_dim)
    : dim_(dim), classes_(classes), hidden_dim_(hidden_dim) {
    if (classes < 1) throw ConfigError("head '" + task + "': class count must be positive");
    const std::string base = "head." + task + ".";
    ln_g_ = &params.create(base + "ln.gamma", init_ones({dim}));
    ln_b_ = &params.create(base + "ln.beta", init_zeros({dim}));
    std::size_t in_dim = dim;
    if (hidden_dim > 0) {
        hidden_w_ = &params.create(base + "hidden.w", init_weight({dim, hidden_dim}, rng));
        hidden_b_ = &params.create(base + "hidden.b", init_zeros({hidden_dim}));
        in_dim = hidden_dim;
    }
    out_w_ = &params.create(base + "out.w", init_weight({in_dim, classes}, rng));
    out_b_ = &params.create(base + "out.b", init_zeros({classes}));
}

Tensor ClassificationHead::forward(const Tensor& features, HeadCtx* ctx) const {
    if (features.rank() != 2 || features.cols() != dim_) {
        throw ShapeError("head: expected B x " + std::to_string(dim_) + " features, got " +
                         features.shape_string());
    }
    HeadCtx local;
    HeadCtx& c = ctx ? *ctx : local;
    c.input = features;
    c.normed = layer_norm(features, ln_g_->value, ln_b_->value, 1e-5, &c.ln);
    if (hidden_dim_ > 0) {
        c.hidden_pre = linear(c.normed, hidden_w_->value, hidden_b_->value);
        c.hidden_act = gelu(c.hidden_pre);
        return linear(c.hidden_act, out_w_->value, out_b_->value);
    }
    return linear(c.normed, out_w_->value, out_b_->value);
}

void ClassificationHead::backward(const HeadCtx& ctx, const Tensor& d_logits, Tensor& d_features) {
    auto add_linear = [](const Tensor& x, Parameter* w, Parameter* b, const Tensor& d_y,
                         Tensor* d_x) {
        w->value.ensure_grad();
        b->value.ensure_grad();
        Tensor d_w(w->value.shape), d_b(b->value.shape);
        linear_backward(x, w->value, d_y, d_x, &d_w, &d_b);
        for (std::size_t i = 0; i < d_w.size(); ++i) w->value.grad[i] += d_w.data[i];
        for (std::size_t i = 0; i < d_b.size(); ++i) b->value.grad[i] += d_b.data[i];
    };

    Tensor d_normed(ctx.normed.shape);
    if (hidden_dim_ > 0) {
        Tensor d_act(ctx.hidden_act.shape);
        add_linear(ctx.hidden_act, out_w_, out_b_, d_logits, &d_act);
        Tensor d_pre(ctx.hidden_pre.shape);
        gelu_backward(ctx.hidden_pre, d_act, d_pre);
        add_linear(ctx.normed, hidden_w_, hidden_b_, d_pre, &d_normed);
    } else {
        add_linear(ctx.normed, out_w_, out_b_, d_logits, &d_normed);
    }

    ln_g_->value.ensure_grad();
    ln_b_->value.ensure_grad();
    Tensor d_g(ln_g_->value.shape), d_b(ln_b_->value.shape);
    layer_norm_backward(ctx.ln, ln_g_->value, d_normed, &d_features, &d_g, &d_b);
    for (std::size_t i = 0; i < d_g.size(); ++i) ln_g_->value.grad[i] += d_g.data[i];
    for (std::size_t i = 0; i < d_b.size(); ++i) ln_b_->value.grad[i] += d_b.data[i];
}

namespace {

// Features for one sample: CLS summary, or the mean over non-CLS rows of
// the final-LN tokens when pooling.
Tensor sample_features(const TaskModel& model, const Sample& sample, ForwardTrace* trace) {
    TokenSequence seq = model.adapter->tokenize(sample, trace);
    if (trace) trace->token_count = seq.count();
    const Tensor z0 = add_position_embeddings(seq, model.adapter->pos(), model.adapter->cls());
    const EncodeResult enc = model.encoder->forward(z0, trace ? &trace->encode : nullptr);
    if (!model.pooled) return enc.summary;
    const std::size_t rows = enc.tokens.rows(), d = enc.tokens.cols();
    Tensor pooled({d});
    for (std::size_t i = 1; i < rows; ++i) {
        const double* row = &enc.tokens.data[i * d];
        for (std::size_t j = 0; j < d; ++j) pooled.data[j] += row[j];
    }
    const double inv = 1.0 / static_cast<double>(rows - 1);
    for (std::size_t j = 0; j < d; ++j) pooled.data[j] *= inv;
    return pooled;
}

void sample_backward(TaskModel& model, ForwardTrace& trace, const Tensor& d_feature) {
    const std::size_t d = model.encoder->config().dim;
    const std::size_t n1 = trace.token_count + 1;
    Tensor d_z0;
    if (!model.pooled) {
        d_z0 = model.encoder->backward(trace.encode, d_feature, Tensor());
    } else {
        Tensor d_tokens({n1, d});
        const double inv = 1.0 / static_cast<double>(trace.token_count);
        for (std::size_t i = 1; i < n1; ++i) {
            for (std::size_t j = 0; j < d; ++j) d_tokens(i, j) = d_feature.data[j] * inv;
        }
        d_z0 = model.encoder->backward(trace.encode, Tensor(), d_tokens);
    }
    Tensor d_seq({trace.token_count, d});
    add_position_embeddings_backward(d_z0, model.adapter->pos(), model.adapter->cls(), d_seq);
    model.adapter->tokenize_backward(trace, d_seq);
}

double batch_accuracy_of(const Tensor& logits, std::span<const int> labels) {
    const std::size_t b = logits.rows(), k = logits.cols();
    std::size_t hits = 0;
    for (std::size_t i = 0; i < b; ++i) {
        const double* row = &logits.data[i * k];
        const std::size_t arg =
            static_cast<std::size_t>(std::max_element(row, row + k) - row);
        if (arg == static_cast<std::size_t>(labels[i])) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(b);
}

}  // namespace

Tensor task_forward(const TaskModel& model, std::span<const Sample> batch, BatchTrace* trace) {
    if (!model.adapter || !model.encoder || !model.head) {
        throw ConfigError("task_forward: model is not fully wired");
    }
    if (batch.empty()) throw DataError("task_forward: empty batch");
    const std::size_t d = model.encoder->config().dim;
    Tensor features({batch.size(), d});
    if (trace) trace->samples.assign(batch.size(), ForwardTrace());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const Tensor f =
            sample_features(model, batch[i], trace ? &trace->samples[i] : nullptr);
        std::copy(f.data.begin(), f.data.end(), &features.data[i * d]);
    }
    Tensor logits = model.head->forward(features, trace ? &trace->head : nullptr);
    if (trace) trace->logits = logits;
    return logits;
}

double train_step(TaskModel& model, std::span<const Sample> batch, std::span<const int> labels,
                  AdamOptimizer& optimizer, double* batch_accuracy) {
    if (batch.size() != labels.size()) {
        throw ShapeError("train_step: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(batch.size()) + " samples");
    }
    optimizer.zero_grads();
    BatchTrace trace;
    const Tensor logits = task_forward(model, batch, &trace);
    const std::vector<int> label_vec(labels.begin(), labels.end());
    const double loss = cross_entropy(logits, label_vec);
    if (batch_accuracy) *batch_accuracy = batch_accuracy_of(logits, labels);

    Tensor d_logits(logits.shape);
    cross_entropy_backward(logits, label_vec, d_logits);
    Tensor d_features({batch.size(), model.head->dim()});
    model.head->backward(trace.head, d_logits, d_features);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const Tensor d_feature({model.head->dim()},
                               std::vector<double>(&d_features.data[i * model.head->dim()],
                                                   &d_features.data[(i + 1) * model.head->dim()]));
        sample_backward(model, trace.samples[i], d_feature);
    }
    optimizer.step();
    return loss;
}

EvalResult evaluate(const TaskModel& model, const Dataset& dataset) {
    if (dataset.items.empty()) throw DataError("evaluate: empty dataset");
    EvalResult result;
    std::size_t hits = 0;
    double loss_sum = 0.0;
    for (const LabeledSample& item : dataset.items) {
        const Tensor logits = task_forward(model, std::span(&item.input, 1), nullptr);
        const std::vector<int> label{item.label};
        loss_sum += cross_entropy(logits, label);
        const double* row = logits.data.data();
        const std::size_t k = logits.cols();
        const std::size_t arg =
            static_cast<std::size_t>(std::max_element(row, row + k) - row);
        if (arg == static_cast<std::size_t>(item.label)) ++hits;
    }
    result.accuracy = static_cast<double>(hits) / static_cast<double>(dataset.items.size());
    result.mean_loss = loss_sum / static_cast<double>(dataset.items.size());
    return result;
}

TrainRun run_training(TaskModel& model, const Dataset& train, AdamOptimizer& optimizer,
                      const TrainOptions& options) {
    if (train.items.empty()) throw DataError("run_training: empty dataset");
    if (options.batch_size < 1) throw ConfigError("run_training: batch size must be positive");
    Rng batch_rng(options.seed);
    TrainRun run;
    run.modality = model.adapter->modality();
    run.steps = options.steps;
    run.batch_size = options.batch_size;
    run.seed = options.seed;
    run.trainable_params = trainable_value_count(optimizer.params());
    run.history.reserve(options.steps);

    std::vector<Sample> batch(options.batch_size);
    std::vector<int> labels(options.batch_size);
    for (std::size_t step = 0; step < options.steps; ++step) {
        for (std::size_t i = 0; i < options.batch_size; ++i) {
            const std::size_t pick = batch_rng.uniform_int(train.items.size());
            batch[i] = train.items[pick].input;
            labels[i] = train.items[pick].label;
        }
        double acc = 0.0;
        const double loss = train_step(model, batch, labels, optimizer, &acc);
        run.history.push_back({step, loss, acc});
    }
    return run;
}

std::size_t trainable_value_count(const std::vector<Parameter*>& params) {
    std::size_t n = 0;
    for (const Parameter* p : params) {
        if (p->trainable) n += p->value.size();
    }
    return n;
}

}  // namespace mmt
