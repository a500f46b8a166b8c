// Acceptance suite: runs every criterion at its stated tolerance and
// prints one pass/fail line each. Exit code 0 only if all pass.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "mmt/checkpoint.hpp"
#include "mmt/digest.hpp"
#include "mmt/heads.hpp"
#include "mmt/io.hpp"
#include "mmt/ops.hpp"
#include "mmt/transfer.hpp"
#include "oracles.hpp"

using namespace mmt;

namespace {

struct Criterion {
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
    double budget = 0.0;
};

std::vector<Criterion> g_results;

void run_criterion(const std::string& name, double budget_seconds,
                   const std::function<std::string()>& body) {
    Criterion c;
    c.name = name;
    c.budget = budget_seconds;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        c.detail = body();
        c.passed = true;
    } catch (const std::exception& e) {
        c.detail = e.what();
        c.passed = false;
    }
    c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.passed && budget_seconds > 0.0 && c.seconds > budget_seconds) {
        c.passed = false;
        c.detail += " [over budget]";
    }
    std::cout << (c.passed ? "[PASS] " : "[FAIL] ") << c.name << " (" << std::fixed
              << std::setprecision(1) << c.seconds << "s / " << budget_seconds << "s budget)";
    if (!c.detail.empty()) std::cout << " - " << c.detail;
    std::cout << "\n" << std::defaultfloat;
    g_results.push_back(c);
}

void require(bool cond, const std::string& what) {
    if (!cond) throw std::runtime_error(what);
}

double weighted_sum(const Tensor& y, const Tensor& w) {
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) acc += y.data[i] * w.data[i];
    return acc;
}

void check_grad(const std::string& what, const Tensor& analytic, const Tensor& numeric,
                double tol) {
    const double err = oracle::max_rel_err(analytic, numeric);
    require(err < tol, what + ": rel err " + std::to_string(err) + " >= " + std::to_string(tol));
}

// --- criterion 1 -----------------------------------------------------------

std::string criterion_gradients() {
    std::size_t checks = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Rng rng(seed * 1009);
        {  // linear
            Tensor x = Tensor::random_normal({4, 3}, rng);
            Tensor w = Tensor::random_normal({3, 2}, rng);
            Tensor b = Tensor::random_normal({2}, rng);
            const Tensor lw = Tensor::random_normal({4, 2}, rng);
            auto loss = [&] { return weighted_sum(linear(x, w, b), lw); };
            Tensor dx(x.shape), dw(w.shape), db(b.shape);
            linear_backward(x, w, lw, &dx, &dw, &db);
            check_grad("linear dX", dx, oracle::fd_gradient(x, loss), 1e-5);
            check_grad("linear dW", dw, oracle::fd_gradient(w, loss), 1e-5);
            check_grad("linear dB", db, oracle::fd_gradient(b, loss), 1e-5);
            checks += 3;
        }
        {  // layer norm
            Tensor x = Tensor::random_normal({3, 6}, rng);
            Tensor g = Tensor::random_normal({6}, rng, 0.3);
            for (double& v : g.data) v += 1.0;
            Tensor b = Tensor::random_normal({6}, rng, 0.3);
            const Tensor lw = Tensor::random_normal({3, 6}, rng);
            auto loss = [&] { return weighted_sum(layer_norm(x, g, b), lw); };
            LayerNormCtx ctx;
            layer_norm(x, g, b, 1e-5, &ctx);
            Tensor dx(x.shape), dg(g.shape), db(b.shape);
            layer_norm_backward(ctx, g, lw, &dx, &dg, &db);
            check_grad("layer_norm dX", dx, oracle::fd_gradient(x, loss), 1e-5);
            check_grad("layer_norm dGamma", dg, oracle::fd_gradient(g, loss), 1e-5);
            check_grad("layer_norm dBeta", db, oracle::fd_gradient(b, loss), 1e-5);
            checks += 3;
        }
        {  // gelu
            Tensor x = Tensor::random_normal({5, 4}, rng);
            const Tensor lw = Tensor::random_normal({5, 4}, rng);
            auto loss = [&] { return weighted_sum(gelu(x), lw); };
            Tensor dx(x.shape);
            gelu_backward(x, lw, dx);
            check_grad("gelu dX", dx, oracle::fd_gradient(x, loss), 1e-5);
            ++checks;
        }
        {  // softmax
            Tensor x = Tensor::random_normal({3, 5}, rng);
            const Tensor lw = Tensor::random_normal({3, 5}, rng);
            auto loss = [&] { return weighted_sum(softmax_rows(x), lw); };
            Tensor dx(x.shape);
            softmax_rows_backward(softmax_rows(x), lw, dx);
            check_grad("softmax dX", dx, oracle::fd_gradient(x, loss), 1e-5);
            ++checks;
        }
        {  // cross entropy
            Tensor logits = Tensor::random_normal({4, 5}, rng);
            const std::vector<int> labels{0, 3, 2, 4};
            auto loss = [&] { return cross_entropy(logits, labels); };
            Tensor dl(logits.shape);
            cross_entropy_backward(logits, labels, dl);
            check_grad("cross_entropy dLogits", dl, oracle::fd_gradient(logits, loss), 1e-5);
            ++checks;
        }
        {  // msa + mlp blocks
            const EncoderConfig cfg{.depth = 1, .heads = 2, .dim = 8, .mlp_dim = 12, .n_max = 8};
            ParameterSet params;
            Rng prng(seed * 2003);
            Encoder enc(cfg, params, prng);
            Tensor z = Tensor::random_normal({4, 8}, rng);
            const Tensor lw = Tensor::random_normal({4, 8}, rng);
            {
                auto loss = [&] { return weighted_sum(enc.attention_block(0, z), lw); };
                params.zero_grads();
                BlockCtx ctx;
                enc.attention_block(0, z, &ctx);
                check_grad("msa dZ", enc.attention_block_backward(0, ctx, lw),
                           oracle::fd_gradient(z, loss), 1e-5);
                Parameter& wq = params.get("encoder.block0.attn.wq");
                check_grad("msa dWq", Tensor(wq.value.shape, wq.value.grad),
                           oracle::fd_gradient(wq.value, loss), 1e-5);
                checks += 2;
            }
            {
                auto loss = [&] { return weighted_sum(enc.mlp_block(0, z), lw); };
                params.zero_grads();
                MlpCtx ctx;
                enc.mlp_block(0, z, &ctx);
                check_grad("mlp dZ", enc.mlp_block_backward(0, ctx, lw),
                           oracle::fd_gradient(z, loss), 1e-5);
                Parameter& w1 = params.get("encoder.block0.mlp.w1");
                check_grad("mlp dW1", Tensor(w1.value.shape, w1.value.grad),
                           oracle::fd_gradient(w1.value, loss), 1e-5);
                checks += 2;
            }
        }
        {  // end-to-end tiny model: L=2, D=16, h=2, n=4
            const EncoderConfig cfg{.depth = 2, .heads = 2, .dim = 16, .mlp_dim = 32,
                                    .n_max = 8};
            ParameterSet params;
            Rng prng(seed * 3001);
            Encoder enc(cfg, params, prng);
            Parameter& pos = params.create("tok.pos", Tensor::random_normal({9, 16}, prng, 0.02));
            Parameter& cls = params.create("tok.cls", Tensor::random_normal({1, 16}, prng, 0.02));
            ClassificationHead head("e2e", 16, 3, params, prng);
            TokenSequence seq;
            seq.modality = Modality::image;
            seq.embeddings = Tensor::random_normal({4, 16}, rng);
            const std::vector<int> label{1};

            auto loss = [&] {
                const Tensor z0 = add_position_embeddings(seq, pos, cls);
                const EncodeResult r = enc.forward(z0);
                Tensor features({1, 16}, r.summary.data);
                return cross_entropy(head.forward(features), label);
            };
            params.zero_grads();
            const Tensor z0 = add_position_embeddings(seq, pos, cls);
            EncodeCtx ectx;
            const EncodeResult r = enc.forward(z0, &ectx);
            Tensor features({1, 16}, r.summary.data);
            HeadCtx hctx;
            const Tensor logits = head.forward(features, &hctx);
            Tensor d_logits(logits.shape);
            cross_entropy_backward(logits, label, d_logits);
            Tensor d_features({1, 16});
            head.backward(hctx, d_logits, d_features);
            const Tensor d_summary({16}, d_features.data);
            const Tensor d_z0 = enc.backward(ectx, d_summary, Tensor());
            Tensor d_seq({4, 16});
            add_position_embeddings_backward(d_z0, pos, cls, d_seq);

            for (Parameter* p : params.all()) {
                check_grad("e2e " + p->name, Tensor(p->value.shape, p->value.grad),
                           oracle::fd_gradient(p->value, loss), 1e-4);
                ++checks;
            }
        }
    }
    return std::to_string(checks) + " gradient checks over 20 seeds";
}

// --- criterion 2 -----------------------------------------------------------

std::string criterion_shape_laws() {
    Rng rng(99);
    std::size_t configs = 0;
    for (int trial = 0; trial < 250; ++trial) {
        ParameterSet params;
        Rng prng(rng.next_u64());
        Rng drng(rng.next_u64());
        const std::size_t dim = 4 + 2 * rng.uniform_int(7);
        {
            const std::size_t s = 1 + rng.uniform_int(4);
            const std::size_t h = s * (1 + rng.uniform_int(5));
            const std::size_t w = s * (1 + rng.uniform_int(5));
            const std::size_t c = 1 + rng.uniform_int(3);
            ImageTokenizer tok(c, s, dim, 1 << 14, params, prng);
            require(tok.tokenize(Tensor::random_normal({c, h, w}, drng)).count() ==
                        (h * w) / (s * s),
                    "image N_s law");
            ++configs;
        }
        {
            const std::size_t feat = rng.uniform_int(3);
            const std::size_t p = 16 * (1 + rng.uniform_int(8));
            PointCloudTokenizer tok(feat, dim, 1 + rng.uniform_int(8), 1 << 14, params, prng);
            PointTokenizerCtx ctx;
            const TokenSequence seq =
                tok.tokenize(Tensor::random_uniform({p, 3 + feat}, drng, -1.0, 1.0), &ctx);
            require(seq.count() == p / 16 && seq.dim() == dim, "point P/16 law");
            require(ctx.stage1.centers.size() == p / 4 && ctx.stage1.pre_act.cols() == dim / 2,
                    "point P/4, D/2 stage law");
            ++configs;
        }
        {
            const std::size_t st = 1 + rng.uniform_int(3);
            const std::size_t s = 1 + rng.uniform_int(3);
            const std::size_t frames = st * (1 + rng.uniform_int(3));
            const std::size_t h = s * (1 + rng.uniform_int(4));
            const std::size_t w = s * (1 + rng.uniform_int(4));
            VideoTokenizer tok(1, st, s, dim, 1 << 14, params, prng);
            require(tok.tokenize(Tensor::random_normal({frames, 1, h, w}, drng)).count() ==
                        (frames / st) * (h * w) / (s * s),
                    "video tube law");
            ++configs;
        }
        {
            const std::size_t patch = 2 + rng.uniform_int(6);
            const std::size_t t = patch + rng.uniform_int(50);
            const std::size_t f = patch + rng.uniform_int(50);
            const std::size_t ts = 1 + rng.uniform_int(6);
            const std::size_t fs = 1 + rng.uniform_int(6);
            AudioTokenizer tok(patch, ts, fs, dim, 1 << 14, params, prng);
            const std::size_t want = ((t - patch) / ts + 1) * ((f - patch) / fs + 1);
            require(tok.tokenize(Tensor::random_normal({t, f}, drng)).count() == want,
                    "audio sliding-window law");
            ++configs;
        }
    }
    return std::to_string(configs) + " random valid configs, zero failures";
}

// --- criterion 3 -----------------------------------------------------------

std::string criterion_fps_knn() {
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
        Rng rng(seed * 17);
        const std::size_t p = 2 + rng.uniform_int(15);
        const Tensor points = Tensor::random_uniform({p, 3}, rng, -2.0, 2.0);
        const std::size_t count = 1 + rng.uniform_int(p);
        require(farthest_point_sample(points, count) == oracle::brute_force_fps(points, count),
                "fps mismatch at seed " + std::to_string(seed));
    }
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
        Rng rng(seed * 23);
        const std::size_t p = 4 + rng.uniform_int(61);
        const Tensor points = Tensor::random_uniform({p, 3}, rng, -2.0, 2.0);
        const std::size_t k = 1 + rng.uniform_int(p);
        const std::size_t center = rng.uniform_int(p);
        require(knn_group(points, {center}, k)[0] == oracle::sorted_neighbors(points, center, k),
                "knn mismatch at seed " + std::to_string(seed));
    }
    return "200 FPS seeds (<=16 pts) + 200 KNN seeds (<=64 pts), exact";
}

// --- criterion 4 -----------------------------------------------------------

std::string criterion_freeze() {
    RunConfig cfg;
    cfg.seed = 404;
    cfg.encoder = {.depth = 1, .heads = 2, .dim = 32, .mlp_dim = 64, .n_max = 96};
    cfg.images = {.classes = 2, .per_class = 6, .size = 8, .channels = 1, .noise = 0.05};
    cfg.image_patch = 4;
    cfg.point_clouds = {.classes = 2, .per_class = 6, .points = 64, .jitter = 0.02};
    cfg.audio = {.classes = 2, .per_class = 6, .seconds = 0.2};
    cfg.mel.mel_bins = 32;
    cfg.audio_patch = 8;
    cfg.audio_n_max = 512;
    cfg.text = {.classes = 2, .per_class = 6, .words_per_sentence = 5, .vocab_size = 128};
    cfg.test_per_class = 2;
    cfg.batch = 4;
    cfg.run_fusion = false;

    Pipeline pipe = build_pipeline(cfg);
    pipe.encoder->freeze();
    const std::string before = pipe.backbone_digest();

    struct Leg {
        Modality m;
        std::string tok_prefix;
        std::size_t steps;
    };
    const std::vector<Leg> legs = {{Modality::point_cloud, "tok.point.", 167},
                                   {Modality::audio, "tok.audio.", 167},
                                   {Modality::text, "tok.text.", 166}};
    std::size_t total_steps = 0;
    for (const Leg& leg : legs) {
        const std::string head_prefix = std::string("head.") + to_string(leg.m) + ".";
        const std::string tok_before =
            digest_params(pipe.params_with_prefixes({leg.tok_prefix}));
        const std::string head_before =
            digest_params(pipe.params_with_prefixes({head_prefix}));

        TaskModel model = pipe.task(leg.m);
        AdamOptimizer optim(pipe.params_with_prefixes({leg.tok_prefix, head_prefix}),
                            {.lr = 1e-3});
        Dataset& train = leg.m == Modality::point_cloud ? pipe.point_train
                         : leg.m == Modality::audio     ? pipe.audio_train
                                                        : pipe.text_train;
        TrainOptions opt{.steps = leg.steps, .batch_size = cfg.batch, .seed = 55};
        run_training(model, train, optim, opt);
        total_steps += leg.steps;

        require(pipe.backbone_digest() == before,
                std::string("backbone digest changed during ") + to_string(leg.m));
        require(digest_params(pipe.params_with_prefixes({leg.tok_prefix})) != tok_before,
                std::string("tokenizer digest did not change for ") + to_string(leg.m));
        require(digest_params(pipe.params_with_prefixes({head_prefix})) != head_before,
                std::string("head digest did not change for ") + to_string(leg.m));
    }
    return std::to_string(total_steps) + " frozen steps across 3 modalities, digest bitwise stable";
}

// --- criteria 5, 6, 9 ------------------------------------------------------

struct ExperimentArtifacts {
    ExperimentReport report;
    std::filesystem::path dir;
};

ExperimentArtifacts run_full_experiment(const std::string& tag) {
    RunConfig cfg;  // the default desk-scale recipe
    const auto dir = std::filesystem::temp_directory_path() / ("mmt_acceptance_" + tag);
    std::filesystem::remove_all(dir);
    cfg.out_dir = dir.string();
    Pipeline pipe = build_pipeline(cfg);
    ExperimentArtifacts art;
    art.report = run_transfer_experiment(pipe);
    art.dir = dir;
    write_report_files(art.report, pipe, dir.string());
    return art;
}

std::string criterion_transfer(const ExperimentArtifacts& art) {
    const ExperimentReport& r = art.report;
    require(r.pretrain.train_accuracy >= 0.95,
            "pretrain train accuracy " + std::to_string(r.pretrain.train_accuracy) + " < 0.95");
    require(r.digest_before == r.digest_after, "backbone digest drifted across stages");
    double stage_seconds = r.pretrain.seconds;
    for (const StageResult& s : r.stages) {
        if (s.modality == Modality::fused) continue;
        require(s.heldout_accuracy >= 0.80,
                s.name + " held-out accuracy " + std::to_string(s.heldout_accuracy) + " < 0.80");
        stage_seconds += s.seconds;
    }
    require(stage_seconds < 600.0, "transfer stages exceeded the 10-minute budget");
    std::ostringstream out;
    out << "pretrain " << r.pretrain.train_accuracy;
    for (const StageResult& s : r.stages) {
        if (s.modality == Modality::fused) continue;
        out << ", " << s.name << " " << s.heldout_accuracy;
    }
    out << " (" << std::fixed << std::setprecision(1) << stage_seconds << "s measured)";
    return out.str();
}

std::string criterion_determinism(const ExperimentArtifacts& a, const ExperimentArtifacts& b) {
    const std::vector<std::string> files = {
        "metrics_pretrain.csv", "metrics_transfer_point_cloud.csv",
        "metrics_transfer_audio.csv", "metrics_transfer_text.csv", "metrics_fusion_pooled.csv"};
    for (const std::string& name : files) {
        std::ifstream fa(a.dir / name, std::ios::binary), fb(b.dir / name, std::ios::binary);
        require(fa.good() && fb.good(), name + " missing");
        const std::string ba((std::istreambuf_iterator<char>(fa)),
                             std::istreambuf_iterator<char>());
        const std::string bb((std::istreambuf_iterator<char>(fb)),
                             std::istreambuf_iterator<char>());
        require(!ba.empty() && ba == bb, name + " differs between same-seed runs");
    }
    return std::to_string(files.size()) + " metrics CSVs byte-identical across reruns";
}

std::string criterion_fusion(const ExperimentArtifacts& art) {
    for (const StageResult& s : art.report.stages) {
        if (s.modality != Modality::fused) continue;
        const double chance = s.floor - kFusionMarginOverChance;
        require(s.heldout_accuracy >= s.floor,
                "fused accuracy " + std::to_string(s.heldout_accuracy) + " < chance " +
                    std::to_string(chance) + " + 0.2");
        require(s.seconds < 300.0, "fusion stage exceeded 5 minutes");
        std::ostringstream out;
        out << "fused held-out " << s.heldout_accuracy << " vs floor " << s.floor << " ("
            << std::fixed << std::setprecision(1) << s.seconds << "s measured)";
        return out.str();
    }
    throw std::runtime_error("no fusion stage in the report");
}

// --- criterion 7 -----------------------------------------------------------

std::string criterion_checkpoint() {
    const auto p1 = std::filesystem::temp_directory_path() / "mmt_acc_ckpt_a.mtfc";
    const auto p2 = std::filesystem::temp_directory_path() / "mmt_acc_ckpt_b.mtfc";
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        ParameterSet params;
        Rng rng(seed * 7);
        params.create("encoder.a", Tensor::random_normal({5, 3}, rng));
        params.create("tok.b", Tensor::random_normal({2, 2, 2}, rng));
        params.create("head.c", Tensor::random_normal({7}, rng), seed % 2 == 0);
        const EncoderConfig cfg{.depth = 2, .heads = 2, .dim = 8, .mlp_dim = 16, .n_max = 32};
        const Rng state_rng(seed);
        const std::uint8_t precision = seed % 2 == 0 ? 32 : 64;
        const CheckpointData data = snapshot_checkpoint(
            cfg, params.all(),
            &state_rng, nullptr, precision);
        save_checkpoint(p1.string(), data);
        save_checkpoint(p2.string(), load_checkpoint(p1.string()));
        std::ifstream fa(p1, std::ios::binary), fb(p2, std::ios::binary);
        const std::string ba((std::istreambuf_iterator<char>(fa)),
                             std::istreambuf_iterator<char>());
        const std::string bb((std::istreambuf_iterator<char>(fb)),
                             std::istreambuf_iterator<char>());
        require(ba == bb, "round-trip bytes differ at seed " + std::to_string(seed));
    }
    std::filesystem::remove(p1);
    std::filesystem::remove(p2);
    return "50 randomized parameter sets, byte-identical round-trips";
}

// --- criterion 8 -----------------------------------------------------------

std::string criterion_tokenizer_fidelity() {
    const Vocabulary vocab({"_The", "_super", "market", "_is", "_host", "ing", "_a", "_sale"});
    const std::vector<std::string> expect = {"_The", "_super", "market", "_is",
                                             "_host", "ing",   "_a",     "_sale"};
    require(wordpiece_segment("The supermarket is hosting a sale", vocab) == expect,
            "worked segmentation example mismatch");

    ParameterSet params;
    Rng rng(1);
    ImageTokenizer img(3, 16, 8, 256, params, rng);
    Rng drng(2);
    require(img.tokenize(Tensor::random_normal({3, 224, 224}, drng)).count() == 196,
            "224x224 / S=16 must give 196 tokens");

    PointCloudTokenizer pts(0, 16, 8, 256, params, rng);
    require(pts.tokenize(Tensor::random_uniform({1024, 3}, drng, -1.0, 1.0)).count() == 64,
            "P=1024 must give 64 tokens");
    return "worked example, 196 image tokens, 64 point tokens";
}

}  // namespace

int main() {
    std::cout << "acceptance suite\n================\n";

    run_criterion("1. gradient suite (per-layer 1e-5, end-to-end 1e-4, 20 seeds)", 60.0,
                  criterion_gradients);
    run_criterion("2. tokenizer shape laws (1000 random configs)", 30.0, criterion_shape_laws);
    run_criterion("3. FPS/KNN brute-force oracles (200 seeds each)", 30.0, criterion_fps_knn);
    run_criterion("4. freeze invariant (500 frozen steps, 3 modalities)", 120.0,
                  criterion_freeze);

    ExperimentArtifacts run1, run2;
    bool experiment_ok = true;
    std::string experiment_error;
    try {
        run1 = run_full_experiment("run1");
        run2 = run_full_experiment("run2");
    } catch (const std::exception& e) {
        experiment_ok = false;
        experiment_error = e.what();
    }
    if (experiment_ok) {
        run_criterion("5. transfer experiment (pretrain >=0.95, transfers >=0.80)", 600.0,
                      [&] { return criterion_transfer(run1); });
        run_criterion("6. determinism (same seed, byte-identical metrics CSVs)", 0.0,
                      [&] { return criterion_determinism(run1, run2); });
    } else {
        run_criterion("5. transfer experiment (pretrain >=0.95, transfers >=0.80)", 600.0,
                      [&]() -> std::string { throw std::runtime_error(experiment_error); });
        run_criterion("6. determinism (same seed, byte-identical metrics CSVs)", 0.0,
                      [&]() -> std::string { throw std::runtime_error(experiment_error); });
    }

    run_criterion("7. checkpoint round-trip byte-identity (50 sets)", 10.0,
                  criterion_checkpoint);
    run_criterion("8. tokenizer fidelity (worked example, 196 and 64 tokens)", 30.0,
                  criterion_tokenizer_fidelity);
    if (experiment_ok) {
        run_criterion("9. multimodal fusion (>= 1/K + 0.2, frozen backbone)", 300.0,
                      [&] { return criterion_fusion(run1); });
    } else {
        run_criterion("9. multimodal fusion (>= 1/K + 0.2, frozen backbone)", 300.0,
                      [&]() -> std::string { throw std::runtime_error(experiment_error); });
    }

    std::size_t failed = 0;
    for (const Criterion& c : g_results) failed += c.passed ? 0 : 1;
    std::cout << "================\n"
              << (g_results.size() - failed) << "/" << g_results.size() << " criteria passed\n";
    if (experiment_ok) {
        std::filesystem::remove_all(run1.dir);
        std::filesystem::remove_all(run2.dir);
    }
    return failed == 0 ? 0 : 1;
}
