#include "mmt/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "mmt/digest.hpp"
#include "mmt/encoder.hpp"
#include "mmt/heads.hpp"
#include "mmt/ops.hpp"
#include "mmt/patch_tokenizer.hpp"
#include "mmt/point_tokenizer.hpp"
#include "mmt/rng.hpp"
#include "mmt/transfer.hpp"

namespace mmt {

namespace {

constexpr double kFdStep = 1e-5;
constexpr double kLayerTol = 1e-5;

// Relative error with an absolute floor: below the floor the finite
// difference itself is dominated by roundoff.
double rel_err(double analytic, double numeric) {
    const double denom = std::max(std::abs(analytic) + std::abs(numeric), 1e-4);
    return std::abs(analytic - numeric) / denom;
}

struct SuiteResult {
    std::string name;
    std::size_t passed = 0;
    std::size_t failed = 0;
    std::string first_failure;
};

void record(SuiteResult& suite, bool ok, const std::string& what) {
    if (ok) {
        ++suite.passed;
    } else {
        ++suite.failed;
        if (suite.first_failure.empty()) suite.first_failure = what;
    }
}

// Central finite differences of a scalar loss over every element of x.
Tensor fd_gradient(Tensor& x, const std::function<double()>& loss) {
    Tensor grad(x.shape);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = x.data[i];
        x.data[i] = saved + kFdStep;
        const double up = loss();
        x.data[i] = saved - kFdStep;
        const double down = loss();
        x.data[i] = saved;
        grad.data[i] = (up - down) / (2.0 * kFdStep);
    }
    return grad;
}

double max_rel_err(const Tensor& analytic, const Tensor& numeric) {
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        worst = std::max(worst, rel_err(analytic.data[i], numeric.data[i]));
    }
    return worst;
}

// Loss = sum(weights .* f(x)) gives a dense, non-trivial upstream gradient.
Tensor loss_weights(const Tensor& like, Rng& rng) {
    return Tensor::random_normal(like.shape, rng, 1.0);
}

double weighted_sum(const Tensor& y, const Tensor& w) {
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) acc += y.data[i] * w.data[i];
    return acc;
}

void gradient_suite(SuiteResult& suite, bool corrupt_gelu) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Rng rng(seed * 7919);

        {  // linear
            Tensor x = Tensor::random_normal({4, 3}, rng);
            Tensor w = Tensor::random_normal({3, 2}, rng);
            Tensor b = Tensor::random_normal({2}, rng);
            const Tensor lw = loss_weights(linear(x, w, b), rng);
            auto loss = [&] { return weighted_sum(linear(x, w, b), lw); };
            Tensor dx(x.shape), dw(w.shape), db(b.shape);
            linear_backward(x, w, lw, &dx, &dw, &db);
            record(suite, max_rel_err(dx, fd_gradient(x, loss)) < kLayerTol, "linear dX");
            record(suite, max_rel_err(dw, fd_gradient(w, loss)) < kLayerTol, "linear dW");
            record(suite, max_rel_err(db, fd_gradient(b, loss)) < kLayerTol, "linear dB");
        }
        {  // layer_norm
            Tensor x = Tensor::random_normal({3, 6}, rng);
            Tensor g = Tensor::random_normal({6}, rng, 0.5);
            Tensor b = Tensor::random_normal({6}, rng, 0.5);
            for (double& v : g.data) v += 1.0;
            const Tensor lw = loss_weights(layer_norm(x, g, b), rng);
            auto loss = [&] { return weighted_sum(layer_norm(x, g, b), lw); };
            LayerNormCtx ctx;
            layer_norm(x, g, b, 1e-5, &ctx);
            Tensor dx(x.shape), dg(g.shape), db(b.shape);
            layer_norm_backward(ctx, g, lw, &dx, &dg, &db);
            record(suite, max_rel_err(dx, fd_gradient(x, loss)) < kLayerTol, "layer_norm dX");
            record(suite, max_rel_err(dg, fd_gradient(g, loss)) < kLayerTol, "layer_norm dGamma");
            record(suite, max_rel_err(db, fd_gradient(b, loss)) < kLayerTol, "layer_norm dBeta");
        }
        {  // gelu (optionally corrupted: the negative control)
            Tensor x = Tensor::random_normal({5, 4}, rng);
            const Tensor lw = loss_weights(x, rng);
            auto loss = [&] { return weighted_sum(gelu(x), lw); };
            Tensor dx(x.shape);
            gelu_backward(x, lw, dx);
            if (corrupt_gelu) {
                for (double& v : dx.data) v *= 1.5;  // deliberately wrong scale
            }
            record(suite, max_rel_err(dx, fd_gradient(x, loss)) < kLayerTol, "gelu dX");
        }
        {  // softmax rows
            Tensor x = Tensor::random_normal({3, 5}, rng);
            const Tensor lw = loss_weights(x, rng);
            auto loss = [&] { return weighted_sum(softmax_rows(x), lw); };
            const Tensor y = softmax_rows(x);
            Tensor dx(x.shape);
            softmax_rows_backward(y, lw, dx);
            record(suite, max_rel_err(dx, fd_gradient(x, loss)) < kLayerTol, "softmax dX");
        }
        {  // matmul
            Tensor a = Tensor::random_normal({3, 4}, rng);
            Tensor b = Tensor::random_normal({4, 2}, rng);
            const Tensor lw = loss_weights(matmul(a, b), rng);
            auto loss = [&] { return weighted_sum(matmul(a, b), lw); };
            Tensor da(a.shape), db(b.shape);
            matmul_backward(a, b, lw, &da, &db);
            record(suite, max_rel_err(da, fd_gradient(a, loss)) < kLayerTol, "matmul dA");
            record(suite, max_rel_err(db, fd_gradient(b, loss)) < kLayerTol, "matmul dB");
        }
        {  // cross entropy
            Tensor logits = Tensor::random_normal({4, 3}, rng);
            std::vector<int> labels = {0, 2, 1, 2};
            auto loss = [&] { return cross_entropy(logits, labels); };
            Tensor dl(logits.shape);
            cross_entropy_backward(logits, labels, dl);
            record(suite, max_rel_err(dl, fd_gradient(logits, loss)) < kLayerTol,
                   "cross_entropy dLogits");
        }
        {  // attention and mlp blocks through a tiny encoder
            EncoderConfig cfg{.depth = 1, .heads = 2, .dim = 8, .mlp_dim = 16, .n_max = 8};
            ParameterSet params;
            Rng prng(seed * 104729);
            Encoder enc(cfg, params, prng);
            Tensor z = Tensor::random_normal({4, 8}, rng);
            const Tensor lw = loss_weights(z, rng);

            auto msa_loss = [&] { return weighted_sum(enc.attention_block(0, z), lw); };
            params.zero_grads();
            BlockCtx bctx;
            enc.attention_block(0, z, &bctx);
            const Tensor d_z_msa = enc.attention_block_backward(0, bctx, lw);
            record(suite, max_rel_err(d_z_msa, fd_gradient(z, msa_loss)) < kLayerTol, "msa dZ");
            Parameter& wq = params.get("encoder.block0.attn.wq");
            record(suite,
                   max_rel_err(Tensor(wq.value.shape, wq.value.grad),
                               fd_gradient(wq.value, msa_loss)) < kLayerTol,
                   "msa dWq");

            auto mlp_loss = [&] { return weighted_sum(enc.mlp_block(0, z), lw); };
            params.zero_grads();
            MlpCtx mctx;
            enc.mlp_block(0, z, &mctx);
            const Tensor d_z_mlp = enc.mlp_block_backward(0, mctx, lw);
            record(suite, max_rel_err(d_z_mlp, fd_gradient(z, mlp_loss)) < kLayerTol, "mlp dZ");
            Parameter& w1 = params.get("encoder.block0.mlp.w1");
            record(suite,
                   max_rel_err(Tensor(w1.value.shape, w1.value.grad),
                               fd_gradient(w1.value, mlp_loss)) < kLayerTol,
                   "mlp dW1");
        }
    }
}

void fps_knn_suite(SuiteResult& suite) {
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        Rng rng(seed * 31);
        const std::size_t p = 4 + rng.uniform_int(13);  // 4..16 points
        Tensor points = Tensor::random_uniform({p, 3}, rng, -1.0, 1.0);
        const std::size_t count = 1 + rng.uniform_int(p);

        // brute-force greedy FPS oracle
        std::vector<std::size_t> expect{0};
        std::vector<char> taken(p, 0);
        taken[0] = 1;
        auto d2 = [&](std::size_t a, std::size_t b) {
            double acc = 0.0;
            for (int i = 0; i < 3; ++i) {
                const double d = points(a, i) - points(b, i);
                acc += d * d;
            }
            return acc;
        };
        while (expect.size() < count) {
            double best = -1.0;
            std::size_t best_idx = p;
            for (std::size_t i = 0; i < p; ++i) {
                if (taken[i]) continue;
                double nearest = std::numeric_limits<double>::infinity();
                for (std::size_t s : expect) nearest = std::min(nearest, d2(i, s));
                if (nearest > best) {
                    best = nearest;
                    best_idx = i;
                }
            }
            taken[best_idx] = 1;
            expect.push_back(best_idx);
        }
        record(suite, farthest_point_sample(points, count) == expect, "fps vs brute force");

        const std::size_t k = 1 + rng.uniform_int(p);
        std::vector<std::size_t> centers{0, p / 2};
        const auto groups = knn_group(points, centers, k);
        bool ok = true;
        for (std::size_t g = 0; g < centers.size(); ++g) {
            std::vector<std::pair<double, std::size_t>> order;
            for (std::size_t i = 0; i < p; ++i) order.emplace_back(d2(i, centers[g]), i);
            std::sort(order.begin(), order.end());
            for (std::size_t i = 0; i < k; ++i) ok = ok && groups[g][i] == order[i].second;
        }
        record(suite, ok, "knn vs distance sort");
    }
}

void shape_law_suite(SuiteResult& suite) {
    Rng rng(424242);
    for (int trial = 0; trial < 60; ++trial) {
        ParameterSet params;
        Rng prng(rng.next_u64());
        const std::size_t dim = 8 + 2 * rng.uniform_int(8);

        {  // image: N_s = HW / S^2
            const std::size_t s = 1 + rng.uniform_int(4);
            const std::size_t h = s * (1 + rng.uniform_int(4));
            const std::size_t w = s * (1 + rng.uniform_int(4));
            const std::size_t c = 1 + rng.uniform_int(3);
            ImageTokenizer tok(c, s, dim, 1024, params, prng);
            Rng drng(trial);
            const Tensor img = Tensor::random_normal({c, h, w}, drng);
            const TokenSequence seq = tok.tokenize(img);
            record(suite, seq.count() == (h * w) / (s * s) && seq.dim() == dim, "image N_s law");
        }
        {  // point cloud: P -> P/4 -> P/16
            const std::size_t p = 16 * (1 + rng.uniform_int(8));
            PointCloudTokenizer tok(0, dim, 4, 1024, params, prng);
            Rng drng(trial + 1000);
            const Tensor cloud = Tensor::random_uniform({p, 3}, drng, -1.0, 1.0);
            const TokenSequence seq = tok.tokenize(cloud);
            record(suite, seq.count() == p / 16 && seq.dim() == dim, "point P/16 law");
        }
        {  // audio sliding-window law
            const std::size_t patch = 2 + rng.uniform_int(6);
            const std::size_t t = patch + rng.uniform_int(40);
            const std::size_t f = patch + rng.uniform_int(40);
            const std::size_t ts = 1 + rng.uniform_int(6);
            const std::size_t fs = 1 + rng.uniform_int(6);
            AudioTokenizer tok(patch, ts, fs, dim, 4096, params, prng);
            Rng drng(trial + 2000);
            const Tensor spec = Tensor::random_normal({t, f}, drng);
            const TokenSequence seq = tok.tokenize(spec);
            const std::size_t want = AudioTokenizer::axis_positions(t, patch, ts) *
                                     AudioTokenizer::axis_positions(f, patch, fs);
            record(suite, seq.count() == want, "audio window-count law");
        }
        {  // video: (Frames/S_t) * (HW/S^2)
            const std::size_t s = 1 + rng.uniform_int(3);
            const std::size_t st = 1 + rng.uniform_int(3);
            const std::size_t frames = st * (1 + rng.uniform_int(3));
            const std::size_t h = s * (1 + rng.uniform_int(3));
            const std::size_t w = s * (1 + rng.uniform_int(3));
            VideoTokenizer tok(1, st, s, dim, 4096, params, prng);
            Rng drng(trial + 3000);
            const Tensor clip = Tensor::random_normal({frames, 1, h, w}, drng);
            const TokenSequence seq = tok.tokenize(clip);
            record(suite, seq.count() == (frames / st) * (h * w) / (s * s), "video tube law");
        }
    }
}

void freeze_suite(SuiteResult& suite) {
    RunConfig cfg;
    cfg.seed = 7;
    cfg.encoder = {.depth = 1, .heads = 2, .dim = 16, .mlp_dim = 32, .n_max = 64};
    cfg.images = {.classes = 2, .per_class = 4, .size = 8, .channels = 1, .noise = 0.05};
    cfg.image_patch = 4;
    cfg.point_clouds = {.classes = 2, .per_class = 4, .points = 64, .jitter = 0.02};
    cfg.audio = {.classes = 2, .per_class = 4, .seconds = 0.2};
    cfg.mel.mel_bins = 32;
    cfg.audio_patch = 8;
    cfg.audio_n_max = 512;
    cfg.text = {.classes = 2, .per_class = 4, .words_per_sentence = 5, .vocab_size = 128};
    cfg.test_per_class = 2;
    cfg.batch = 2;
    cfg.run_fusion = false;

    Pipeline pipe = build_pipeline(cfg);
    pipe.encoder->freeze();
    const std::string before = pipe.backbone_digest();

    for (Modality m : {Modality::point_cloud, Modality::audio, Modality::text}) {
        const std::vector<std::string> tok_prefix = {std::string("tok.") +
                                                     (m == Modality::point_cloud ? "point."
                                                      : m == Modality::audio     ? "audio."
                                                                                 : "text.")};
        const std::string head_prefix = std::string("head.") + to_string(m) + ".";
        const std::string tok_before = digest_params(pipe.params_with_prefixes(tok_prefix));

        TaskModel model = pipe.task(m);
        AdamOptimizer optim(pipe.params_with_prefixes({tok_prefix[0], head_prefix}),
                            {.lr = 1e-3});
        Dataset& train = m == Modality::point_cloud ? pipe.point_train
                         : m == Modality::audio     ? pipe.audio_train
                                                    : pipe.text_train;
        TrainOptions opt{.steps = 5, .batch_size = 2, .seed = 11};
        run_training(model, train, optim, opt);

        record(suite, pipe.backbone_digest() == before,
               std::string("backbone digest after ") + to_string(m));
        record(suite, digest_params(pipe.params_with_prefixes(tok_prefix)) != tok_before,
               std::string("tokenizer digest moved for ") + to_string(m));
    }
}

}  // namespace

int run_selftest(std::ostream& out) {
    std::vector<SuiteResult> suites;

    {
        SuiteResult s;
        s.name = "gradients";
        gradient_suite(s, false);
        suites.push_back(s);
    }
    {
        // negative control: a corrupted backward must be caught
        SuiteResult inner;
        inner.name = "corrupted";
        gradient_suite(inner, true);
        SuiteResult s;
        s.name = "gradient_sensitivity";
        record(s, inner.failed > 0, "corrupted gelu backward slipped through");
        suites.push_back(s);
    }
    {
        SuiteResult s;
        s.name = "fps_knn_oracles";
        fps_knn_suite(s);
        suites.push_back(s);
    }
    {
        SuiteResult s;
        s.name = "shape_laws";
        shape_law_suite(s);
        suites.push_back(s);
    }
    {
        SuiteResult s;
        s.name = "freeze_invariant";
        freeze_suite(s);
        suites.push_back(s);
    }

    int failures = 0;
    for (const SuiteResult& s : suites) {
        out << (s.failed == 0 ? "[PASS] " : "[FAIL] ") << s.name << ": " << s.passed
            << " checks passed, " << s.failed << " failed";
        if (s.failed > 0) out << " (first: " << s.first_failure << ")";
        out << "\n";
        failures += static_cast<int>(s.failed);
    }
    out << (failures == 0 ? "selftest: all suites passed\n"
                          : "selftest: " + std::to_string(failures) + " checks failed\n");
    return failures == 0 ? 0 : 3;
}

}  // namespace mmt
