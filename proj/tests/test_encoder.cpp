#include <doctest.h>

#include "mmt/digest.hpp"
#include "mmt/encoder.hpp"
#include "mmt/optim.hpp"
#include "oracles.hpp"

using namespace mmt;

namespace {

double weighted_sum(const Tensor& y, const Tensor& w) {
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) acc += y.data[i] * w.data[i];
    return acc;
}

}  // namespace

TEST_CASE("config invariants: depth >= 1, dim divisible by heads") {
    CHECK_THROWS_AS(EncoderConfig{.depth = 0}.validate(), ConfigError);
    CHECK_THROWS_AS((EncoderConfig{.depth = 1, .heads = 3, .dim = 64}).validate(), ConfigError);
    CHECK_NOTHROW((EncoderConfig{.depth = 12, .heads = 12, .dim = 768, .mlp_dim = 3072,
                                 .n_max = 256})
                      .validate());
}

TEST_CASE("base-scale constants are constructible and counted") {
    const EncoderConfig base{.depth = 12, .heads = 12, .dim = 768, .mlp_dim = 3072,
                             .n_max = 197};
    CHECK(base.mlp_dim == 4 * base.dim);
    ParameterSet params;
    Rng rng(1);
    const Encoder enc(base, params, rng);
    CHECK(params.value_count() == Encoder::parameter_count(base));
}

TEST_CASE("single-token attention is an identity distribution") {
    const EncoderConfig cfg{.depth = 1, .heads = 2, .dim = 8, .mlp_dim = 16, .n_max = 4};
    ParameterSet params;
    Rng rng(2);
    Encoder enc(cfg, params, rng);
    Rng drng(3);
    const Tensor z = Tensor::random_normal({1, 8}, drng);
    BlockCtx ctx;
    enc.attention_block(0, z, &ctx);
    for (const Tensor& attn : ctx.attn.attn) {
        CHECK(attn.rows() == 1);
        CHECK(attn(0, 0) == doctest::Approx(1.0));
    }
}

TEST_CASE("zero q/k weights give uniform attention") {
    const EncoderConfig cfg{.depth = 1, .heads = 2, .dim = 8, .mlp_dim = 16, .n_max = 8};
    ParameterSet params;
    Rng rng(2);
    Encoder enc(cfg, params, rng);
    for (const char* name : {"encoder.block0.attn.wq", "encoder.block0.attn.bq",
                             "encoder.block0.attn.wk", "encoder.block0.attn.bk"}) {
        for (double& v : params.get(name).value.data) v = 0.0;
    }
    Rng drng(3);
    BlockCtx ctx;
    enc.attention_block(0, Tensor::random_normal({5, 8}, drng), &ctx);
    for (const Tensor& attn : ctx.attn.attn) {
        for (double v : attn.data) CHECK(v == doctest::Approx(0.2));
    }
}

TEST_CASE("attention rows are probability distributions") {
    const EncoderConfig cfg{.depth = 2, .heads = 4, .dim = 16, .mlp_dim = 32, .n_max = 16};
    ParameterSet params;
    Rng rng(4);
    Encoder enc(cfg, params, rng);
    Rng drng(5);
    EncodeCtx ctx;
    enc.forward(Tensor::random_normal({7, 16}, drng), &ctx);
    for (const BlockCtx& block : ctx.blocks) {
        for (const Tensor& attn : block.attn.attn) {
            for (std::size_t i = 0; i < attn.rows(); ++i) {
                double sum = 0.0;
                for (std::size_t j = 0; j < attn.cols(); ++j) sum += attn(i, j);
                CHECK(std::abs(sum - 1.0) < 1e-12);
            }
        }
    }
}

TEST_CASE("zeroed branches make the pre-final-LN stack a bitwise passthrough") {
    const EncoderConfig cfg{.depth = 2, .heads = 2, .dim = 8, .mlp_dim = 16, .n_max = 8};
    ParameterSet params;
    Rng rng(6);
    Encoder enc(cfg, params, rng);
    for (Parameter* p : params.all()) {
        // zero every attention/MLP weight and bias; keep LN affine intact
        if (p->name.find(".attn.") != std::string::npos ||
            p->name.find(".mlp.") != std::string::npos) {
            for (double& v : p->value.data) v = 0.0;
        }
    }
    Rng drng(7);
    const Tensor z0 = Tensor::random_normal({5, 8}, drng);
    EncodeCtx ctx;
    enc.forward(z0, &ctx);
    CHECK(ctx.pre_final.data == z0.data);  // residual-only path
}

TEST_CASE("mlp block with zero weights is an exact residual passthrough") {
    const EncoderConfig cfg{.depth = 1, .heads = 2, .dim = 8, .mlp_dim = 16, .n_max = 8};
    ParameterSet params;
    Rng rng(6);
    Encoder enc(cfg, params, rng);
    for (const char* name : {"encoder.block0.mlp.w1", "encoder.block0.mlp.b1",
                             "encoder.block0.mlp.w2", "encoder.block0.mlp.b2"}) {
        for (double& v : params.get(name).value.data) v = 0.0;
    }
    Rng drng(8);
    const Tensor z = Tensor::random_normal({4, 8}, drng);
    CHECK(enc.mlp_block(0, z).data == z.data);
}

TEST_CASE("sequences longer than n_max are rejected") {
    const EncoderConfig cfg{.depth = 1, .heads = 2, .dim = 8, .mlp_dim = 16, .n_max = 4};
    ParameterSet params;
    Rng rng(9);
    Encoder enc(cfg, params, rng);
    Rng drng(10);
    CHECK_THROWS_AS(enc.forward(Tensor::random_normal({6, 8}, drng)), SequenceLengthError);
    CHECK_NOTHROW(enc.forward(Tensor::random_normal({5, 8}, drng)));
}

TEST_CASE("one parameter set encodes sequences of any length uniformly") {
    const EncoderConfig cfg{.depth = 2, .heads = 4, .dim = 32, .mlp_dim = 64, .n_max = 256};
    ParameterSet params;
    Rng rng(11);
    Encoder enc(cfg, params, rng);
    Rng drng(12);
    const EncodeResult image_like = enc.forward(Tensor::random_normal({197, 32}, drng));
    const EncodeResult point_like = enc.forward(Tensor::random_normal({65, 32}, drng));
    CHECK(image_like.summary.size() == 32);
    CHECK(point_like.summary.size() == 32);
}

TEST_CASE("permuting non-CLS rows with matched positions leaves the summary unchanged") {
    const EncoderConfig cfg{.depth = 2, .heads = 2, .dim = 8, .mlp_dim = 16, .n_max = 8};
    ParameterSet params;
    Rng rng(13);
    Encoder enc(cfg, params, rng);

    Rng drng(14);
    Tensor z0 = Tensor::random_normal({5, 8}, drng);
    Tensor permuted = z0;
    // swap token rows 1 and 3 (row 0 is CLS); position embeddings moved
    // with their tokens by construction of the input
    for (std::size_t j = 0; j < 8; ++j) std::swap(permuted(1, j), permuted(3, j));

    const EncodeResult a = enc.forward(z0);
    const EncodeResult b = enc.forward(permuted);
    for (std::size_t j = 0; j < 8; ++j) {
        CHECK(a.summary.data[j] == doctest::Approx(b.summary.data[j]).epsilon(1e-12));
    }
}

TEST_CASE("encode is deterministic") {
    const EncoderConfig cfg{.depth = 2, .heads = 2, .dim = 16, .mlp_dim = 32, .n_max = 16};
    ParameterSet params;
    Rng rng(15);
    Encoder enc(cfg, params, rng);
    Rng drng(16);
    const Tensor z0 = Tensor::random_normal({6, 16}, drng);
    const EncodeResult a = enc.forward(z0);
    const EncodeResult b = enc.forward(z0);
    CHECK(a.summary.data == b.summary.data);
    CHECK(a.tokens.data == b.tokens.data);
}

TEST_CASE("msa and mlp block gradients match finite differences, 20 seeds") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const EncoderConfig cfg{.depth = 1, .heads = 2, .dim = 8, .mlp_dim = 12, .n_max = 8};
        ParameterSet params;
        Rng prng(seed * 31);
        Encoder enc(cfg, params, prng);
        Rng drng(seed * 53);
        Tensor z = Tensor::random_normal({5, 8}, drng);
        const Tensor lw = Tensor::random_normal({5, 8}, drng);

        {
            auto loss = [&] { return weighted_sum(enc.attention_block(0, z), lw); };
            params.zero_grads();
            BlockCtx ctx;
            enc.attention_block(0, z, &ctx);
            const Tensor d_z = enc.attention_block_backward(0, ctx, lw);
            CHECK(oracle::max_rel_err(d_z, oracle::fd_gradient(z, loss)) < 1e-5);
            for (const char* name :
                 {"encoder.block0.attn.wq", "encoder.block0.attn.wk", "encoder.block0.attn.wv",
                  "encoder.block0.attn.wo", "encoder.block0.ln1.gamma"}) {
                Parameter& p = params.get(name);
                CHECK(oracle::max_rel_err(Tensor(p.value.shape, p.value.grad),
                                          oracle::fd_gradient(p.value, loss)) < 1e-5);
            }
        }
        {
            auto loss = [&] { return weighted_sum(enc.mlp_block(0, z), lw); };
            params.zero_grads();
            MlpCtx ctx;
            enc.mlp_block(0, z, &ctx);
            const Tensor d_z = enc.mlp_block_backward(0, ctx, lw);
            CHECK(oracle::max_rel_err(d_z, oracle::fd_gradient(z, loss)) < 1e-5);
            for (const char* name : {"encoder.block0.mlp.w1", "encoder.block0.mlp.w2",
                                     "encoder.block0.ln2.gamma", "encoder.block0.mlp.b1"}) {
                Parameter& p = params.get(name);
                CHECK(oracle::max_rel_err(Tensor(p.value.shape, p.value.grad),
                                          oracle::fd_gradient(p.value, loss)) < 1e-5);
            }
        }
    }
}

TEST_CASE("full encode gradient matches finite differences at tiny scale") {
    const EncoderConfig cfg{.depth = 2, .heads = 2, .dim = 16, .mlp_dim = 32, .n_max = 8};
    ParameterSet params;
    Rng prng(71);
    Encoder enc(cfg, params, prng);
    Rng drng(72);
    Tensor z0 = Tensor::random_normal({5, 16}, drng);  // n = 4 tokens + CLS
    const Tensor lw_summary = Tensor::random_normal({16}, drng);

    auto loss = [&] {
        const EncodeResult r = enc.forward(z0);
        double acc = 0.0;
        for (std::size_t j = 0; j < 16; ++j) acc += r.summary.data[j] * lw_summary.data[j];
        return acc;
    };
    params.zero_grads();
    EncodeCtx ctx;
    enc.forward(z0, &ctx);
    const Tensor d_z0 = enc.backward(ctx, lw_summary, Tensor());
    CHECK(oracle::max_rel_err(d_z0, oracle::fd_gradient(z0, loss)) < 1e-4);

    for (Parameter* p : params.all()) {
        CHECK(oracle::max_rel_err(Tensor(p->value.shape, p->value.grad),
                                  oracle::fd_gradient(p->value, loss)) < 1e-4);
    }
}

TEST_CASE("freeze stops optimizer updates; unfreeze restores them; freeze is idempotent") {
    const EncoderConfig cfg{.depth = 1, .heads = 2, .dim = 8, .mlp_dim = 16, .n_max = 8};
    ParameterSet params;
    Rng prng(81);
    Encoder enc(cfg, params, prng);
    AdamOptimizer optim(params.all(), {.lr = 0.05});

    enc.freeze();
    enc.freeze();  // idempotent
    CHECK(enc.frozen());
    const std::string frozen_digest = digest_params(params.all());
    for (int step = 0; step < 100; ++step) {
        for (Parameter* p : params.all()) {
            p->value.ensure_grad();
            for (double& g : p->value.grad) g = 1.0;
        }
        optim.step();
    }
    CHECK(digest_params(params.all()) == frozen_digest);

    enc.unfreeze();
    CHECK_FALSE(enc.frozen());
    for (Parameter* p : params.all()) {
        p->value.ensure_grad();
        for (double& g : p->value.grad) g = 1.0;
    }
    optim.step();
    CHECK(digest_params(params.all()) != frozen_digest);
}
