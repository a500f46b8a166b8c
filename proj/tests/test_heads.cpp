#include <doctest.h>

#include "mmt/digest.hpp"
#include "mmt/heads.hpp"
#include "oracles.hpp"

using namespace mmt;

namespace {

// Tiny image task fixture: 2 classes of 4x4 single-channel images.
struct Fixture {
    EncoderConfig cfg{.depth = 1, .heads = 2, .dim = 16, .mlp_dim = 32, .n_max = 32};
    ParameterSet params;
    Rng prng{911};
    Encoder encoder{cfg, params, prng};
    ImageTokenizer tok{1, 2, 16, 32, params, prng};
    ImageAdapter adapter{tok};
    ClassificationHead head{"demo", 16, 2, params, prng};

    TaskModel model() {
        TaskModel m;
        m.adapter = &adapter;
        m.encoder = &encoder;
        m.head = &head;
        return m;
    }

    static Dataset separable_images(std::size_t per_class) {
        Dataset data;
        data.classes = 2;
        Rng rng(5);
        for (std::size_t cls = 0; cls < 2; ++cls) {
            for (std::size_t i = 0; i < per_class; ++i) {
                Tensor img({1, 4, 4});
                for (double& v : img.data) {
                    v = (cls == 0 ? 1.0 : -1.0) + 0.05 * rng.normal();
                }
                data.items.push_back({ImageSample{std::move(img)}, static_cast<int>(cls)});
            }
        }
        return data;
    }
};

}  // namespace

TEST_CASE("head shapes: K=1 is legal; zero weights give constant logits") {
    ParameterSet params;
    Rng rng(1);
    ClassificationHead one("one", 8, 1, params, rng);
    Rng drng(2);
    const Tensor features = Tensor::random_normal({3, 8}, drng);
    CHECK(one.forward(features).cols() == 1);

    ClassificationHead flat("flat", 8, 4, params, rng);
    for (double& v : params.get("head.flat.out.w").value.data) v = 0.0;
    params.get("head.flat.out.b").value.data = {1.0, 2.0, 3.0, 4.0};
    const Tensor logits = flat.forward(features);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            CHECK(logits(i, j) == doctest::Approx(static_cast<double>(j + 1)));
        }
    }
}

TEST_CASE("head gradients match finite differences, including the MLP variant") {
    for (std::size_t hidden : {std::size_t{0}, std::size_t{8}}) {
        ParameterSet params;
        Rng rng(3);
        ClassificationHead head("h", 8, 3, params, rng, hidden);
        Rng drng(4);
        Tensor features = Tensor::random_normal({4, 8}, drng);
        const Tensor lw = Tensor::random_normal({4, 3}, drng);
        auto weighted = [&] {
            const Tensor y = head.forward(features);
            double acc = 0.0;
            for (std::size_t i = 0; i < y.size(); ++i) acc += y.data[i] * lw.data[i];
            return acc;
        };
        params.zero_grads();
        HeadCtx ctx;
        head.forward(features, &ctx);
        Tensor d_features(features.shape);
        head.backward(ctx, lw, d_features);
        CHECK(oracle::max_rel_err(d_features, oracle::fd_gradient(features, weighted)) < 1e-5);
        for (Parameter* p : params.all()) {
            CHECK(oracle::max_rel_err(Tensor(p->value.shape, p->value.grad),
                                      oracle::fd_gradient(p->value, weighted)) < 1e-5);
        }
    }
}

TEST_CASE("identical inputs give identical logits; mismatched modality is a config error") {
    Fixture fx;
    TaskModel model = fx.model();
    Rng drng(6);
    const Sample sample = ImageSample{Tensor::random_normal({1, 4, 4}, drng)};
    const Tensor a = task_forward(model, std::span(&sample, 1), nullptr);
    const Tensor b = task_forward(model, std::span(&sample, 1), nullptr);
    CHECK(a.data == b.data);

    const Sample wrong = TextSample{"hello"};
    CHECK_THROWS_AS(task_forward(model, std::span(&wrong, 1), nullptr), ConfigError);
}

TEST_CASE("train_step with lr=0 changes nothing and loss repeats exactly") {
    Fixture fx;
    TaskModel model = fx.model();
    AdamOptimizer optim(fx.params.all(), {.lr = 0.0});
    const Dataset data = Fixture::separable_images(2);
    std::vector<Sample> batch;
    std::vector<int> labels;
    for (const auto& item : data.items) {
        batch.push_back(item.input);
        labels.push_back(item.label);
    }
    const std::string before = digest_params(fx.params.all());
    const double loss1 = train_step(model, batch, labels, optim);
    const double loss2 = train_step(model, batch, labels, optim);
    CHECK(digest_params(fx.params.all()) == before);
    CHECK(loss1 == loss2);
}

TEST_CASE("frozen backbone: tokenizer and head move, backbone digest does not") {
    Fixture fx;
    fx.encoder.freeze();
    TaskModel model = fx.model();
    AdamOptimizer optim(fx.params.all(), {.lr = 1e-3});
    const Dataset data = Fixture::separable_images(4);

    const std::string backbone_before = digest_params_prefix(fx.params.all(), "encoder.");
    const std::string tok_before = digest_params_prefix(fx.params.all(), "tok.");
    const std::string head_before = digest_params_prefix(fx.params.all(), "head.");

    std::vector<Sample> batch;
    std::vector<int> labels;
    for (const auto& item : data.items) {
        batch.push_back(item.input);
        labels.push_back(item.label);
    }
    for (int i = 0; i < 5; ++i) train_step(model, batch, labels, optim);

    CHECK(digest_params_prefix(fx.params.all(), "encoder.") == backbone_before);
    CHECK(digest_params_prefix(fx.params.all(), "tok.") != tok_before);
    CHECK(digest_params_prefix(fx.params.all(), "head.") != head_before);
}

TEST_CASE("end-to-end gradients through a frozen backbone reach tokenizer and head") {
    Fixture fx;
    fx.encoder.freeze();
    TaskModel model = fx.model();
    Rng drng(8);
    const Sample sample = ImageSample{Tensor::random_normal({1, 4, 4}, drng)};
    const std::vector<int> labels{1};

    auto loss = [&] {
        const Tensor logits = task_forward(model, std::span(&sample, 1), nullptr);
        return cross_entropy(logits, labels);
    };
    fx.params.zero_grads();
    BatchTrace trace;
    const Tensor logits = task_forward(model, std::span(&sample, 1), &trace);
    Tensor d_logits(logits.shape);
    cross_entropy_backward(logits, labels, d_logits);
    Tensor d_features({1, 16});
    fx.head.backward(trace.head, d_logits, d_features);
    {
        const Tensor d_feature({16}, std::vector<double>(d_features.data.begin(),
                                                         d_features.data.end()));
        Tensor d_z0 = fx.encoder.backward(trace.samples[0].encode, d_feature, Tensor());
        Tensor d_seq({trace.samples[0].token_count, 16});
        add_position_embeddings_backward(d_z0, fx.adapter.pos(), fx.adapter.cls(), d_seq);
        fx.adapter.tokenize_backward(trace.samples[0], d_seq);
    }
    Parameter& tok_w = fx.tok.proj_weight();
    CHECK(oracle::max_rel_err(Tensor(tok_w.value.shape, tok_w.value.grad),
                              oracle::fd_gradient(tok_w.value, loss)) < 1e-4);
    Parameter& head_w = fx.params.get("head.demo.out.w");
    CHECK(oracle::max_rel_err(Tensor(head_w.value.shape, head_w.value.grad),
                              oracle::fd_gradient(head_w.value, loss)) < 1e-4);
}

TEST_CASE("linearly separable task reaches 95% train accuracy in 200 steps") {
    Fixture fx;
    fx.encoder.freeze();  // random frozen backbone
    TaskModel model = fx.model();
    AdamOptimizer optim(
        collect_params({&fx.params}), {.lr = 2e-3});
    const Dataset data = Fixture::separable_images(8);
    TrainOptions opt{.steps = 200, .batch_size = 8, .seed = 17};
    run_training(model, data, optim, opt);
    CHECK(evaluate(model, data).accuracy >= 0.95);
}

TEST_CASE("evaluate is pure and repeatable; perfect memorization gives 1.0") {
    Fixture fx;
    TaskModel model = fx.model();
    AdamOptimizer optim(fx.params.all(), {.lr = 2e-3});
    const Dataset data = Fixture::separable_images(4);
    TrainOptions opt{.steps = 150, .batch_size = 4, .seed = 3};
    run_training(model, data, optim, opt);

    const std::string digest = digest_params(fx.params.all());
    const EvalResult a = evaluate(model, data);
    const EvalResult b = evaluate(model, data);
    CHECK(a.accuracy == b.accuracy);
    CHECK(a.mean_loss == b.mean_loss);
    CHECK(digest_params(fx.params.all()) == digest);
    CHECK(a.accuracy == doctest::Approx(1.0));

    Dataset empty;
    CHECK_THROWS_AS(evaluate(model, empty), DataError);
}

TEST_CASE("random head on balanced data sits near chance") {
    Fixture fx;
    TaskModel model = fx.model();
    const Dataset data = Fixture::separable_images(32);  // 64 samples, 2 classes
    const double acc = evaluate(model, data).accuracy;
    // binomial 3-sigma band around 0.5 for n = 64
    CHECK(acc > 0.5 - 3.0 * 0.0625);
    CHECK(acc < 0.5 + 3.0 * 0.0625);
}

TEST_CASE("logit shift invariance at the decision level") {
    Fixture fx;
    Rng drng(9);
    const Tensor logits = Tensor::random_normal({6, 4}, drng);
    Tensor shifted = logits;
    for (std::size_t i = 0; i < 6; ++i) {
        for (std::size_t j = 0; j < 4; ++j) shifted(i, j) += 7.25;
    }
    for (std::size_t i = 0; i < 6; ++i) {
        const double* a = &logits.data[i * 4];
        const double* s = &shifted.data[i * 4];
        CHECK(std::max_element(a, a + 4) - a == std::max_element(s, s + 4) - s);
    }
}

TEST_CASE("pooled path: one token pools to its own final representation") {
    // image of one patch -> pooled mean over a single non-CLS row
    Fixture fx;
    TaskModel pooled = fx.model();
    pooled.pooled = true;
    Rng drng(20);
    const Tensor pixels = Tensor::random_normal({1, 2, 2}, drng);
    const Sample sample = ImageSample{pixels};
    const Tensor via_model = task_forward(pooled, std::span(&sample, 1), nullptr);

    // by hand: tokenize, add positions, encode, take final token row 1
    const TokenSequence seq = fx.tok.tokenize(pixels);
    REQUIRE(seq.count() == 1);
    const Tensor z0 = add_position_embeddings(seq, fx.adapter.pos(), fx.adapter.cls());
    const EncodeResult r = fx.encoder.forward(z0);
    Tensor row({1, 16});
    for (std::size_t j = 0; j < 16; ++j) row(0, j) = r.tokens(1, j);
    const Tensor direct = fx.head.forward(row);
    for (std::size_t j = 0; j < direct.size(); ++j) {
        CHECK(via_model.data[j] == doctest::Approx(direct.data[j]).epsilon(1e-14));
    }
    CHECK(via_model.cols() == 2);
}

TEST_CASE("pooled mean is permutation invariant to 1e-12") {
    const EncoderConfig cfg{.depth = 1, .heads = 2, .dim = 8, .mlp_dim = 16, .n_max = 8};
    ParameterSet params;
    Rng prng(19);
    Encoder enc(cfg, params, prng);
    Rng drng(20);
    Tensor z0_wide = Tensor::random_normal({4, 8}, drng);
    const EncodeResult a = enc.forward(z0_wide);
    Tensor permuted = z0_wide;
    for (std::size_t j = 0; j < 8; ++j) std::swap(permuted(1, j), permuted(2, j));
    const EncodeResult b = enc.forward(permuted);
    auto pooled = [](const EncodeResult& res) {
        std::vector<double> mean(res.tokens.cols(), 0.0);
        for (std::size_t i = 1; i < res.tokens.rows(); ++i) {
            for (std::size_t j = 0; j < res.tokens.cols(); ++j) mean[j] += res.tokens(i, j);
        }
        for (double& v : mean) v /= static_cast<double>(res.tokens.rows() - 1);
        return mean;
    };
    const auto pa = pooled(a), pb = pooled(b);
    for (std::size_t j = 0; j < 8; ++j) CHECK(pa[j] == doctest::Approx(pb[j]).epsilon(1e-12));
}
