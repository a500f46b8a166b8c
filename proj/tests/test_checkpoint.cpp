#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "mmt/checkpoint.hpp"
#include "mmt/digest.hpp"
#include "mmt/io.hpp"

using namespace mmt;

namespace {

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

std::string file_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

ParameterSet random_params(std::uint64_t seed) {
    ParameterSet params;
    Rng rng(seed);
    params.create("encoder.w", Tensor::random_normal({4, 4}, rng));
    params.create("tok.image.proj.w", Tensor::random_normal({8, 4}, rng));
    params.create("head.out.b", Tensor::random_normal({3}, rng), false);
    return params;
}

}  // namespace

TEST_CASE("checkpoint round-trip: save -> load -> save is byte-identical, both precisions") {
    for (std::uint8_t precision : {std::uint8_t{64}, std::uint8_t{32}}) {
        for (std::uint64_t seed = 1; seed <= 50; ++seed) {
            ParameterSet params = random_params(seed);
            const Rng rng(seed);
            const EncoderConfig cfg{.depth = 2, .heads = 2, .dim = 4, .mlp_dim = 8, .n_max = 16};
            const CheckpointData data = snapshot_checkpoint(
                cfg, params.all(),
                &rng, nullptr, precision);

            const auto p1 = temp_path("mmt_ckpt_a.mtfc");
            const auto p2 = temp_path("mmt_ckpt_b.mtfc");
            save_checkpoint(p1.string(), data);
            const CheckpointData loaded = load_checkpoint(p1.string());
            save_checkpoint(p2.string(), loaded);
            CHECK(file_bytes(p1) == file_bytes(p2));
            std::filesystem::remove(p1);
            std::filesystem::remove(p2);
        }
    }
}

TEST_CASE("restore recovers values, trainable flags, and digests at 64-bit") {
    ParameterSet source = random_params(9);
    const EncoderConfig cfg{.depth = 1, .heads = 1, .dim = 4, .mlp_dim = 8, .n_max = 16};
    const Rng rng(9);
    const CheckpointData data = snapshot_checkpoint(
        cfg, source.all(), &rng,
        nullptr, 64);
    const auto path = temp_path("mmt_ckpt_restore.mtfc");
    save_checkpoint(path.string(), data);

    ParameterSet target = random_params(1234);  // different values, same names/shapes
    restore_parameters(load_checkpoint(path.string()), target.all());
    CHECK(digest_params(target.all()) == digest_params(source.all()));
    CHECK_FALSE(target.get("head.out.b").trainable);
    std::filesystem::remove(path);
}

TEST_CASE("bad magic and versions are rejected with clear errors") {
    const auto path = temp_path("mmt_ckpt_bad.mtfc");
    {
        std::ofstream out(path, std::ios::binary);
        out << "NOPE this is not a checkpoint";
    }
    CHECK_THROWS_WITH_AS(load_checkpoint(path.string()), doctest::Contains("magic"), ConfigError);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_checkpoint("/nonexistent/nowhere.mtfc"), ConfigError);
}

TEST_CASE("shape mismatches on restore name the offending tensor") {
    ParameterSet source = random_params(3);
    const EncoderConfig cfg{.depth = 1, .heads = 1, .dim = 4, .mlp_dim = 8, .n_max = 16};
    const CheckpointData data = snapshot_checkpoint(
        cfg, source.all(), nullptr,
        nullptr, 64);

    ParameterSet target;
    Rng rng(4);
    target.create("encoder.w", Tensor::random_normal({2, 2}, rng));  // wrong shape
    target.create("tok.image.proj.w", Tensor::random_normal({8, 4}, rng));
    target.create("head.out.b", Tensor::random_normal({3}, rng));
    CHECK_THROWS_WITH_AS(restore_parameters(data, target.all()),
                         doctest::Contains("encoder.w"), ConfigError);
}

TEST_CASE("a failed or interrupted save leaves no partial checkpoint behind") {
    // the write goes to <path>.tmp first; only a completed write is renamed
    ParameterSet params = random_params(5);
    const EncoderConfig cfg{.depth = 1, .heads = 1, .dim = 4, .mlp_dim = 8, .n_max = 16};
    const CheckpointData data = snapshot_checkpoint(
        cfg, params.all(), nullptr,
        nullptr, 64);
    const auto dir = temp_path("mmt_ckpt_dir");
    std::filesystem::create_directories(dir);
    const auto path = dir / "out.mtfc";
    save_checkpoint(path.string(), data);
    CHECK(std::filesystem::exists(path));
    CHECK_FALSE(std::filesystem::exists(path.string() + ".tmp"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("optimizer state round-trips through the checkpoint") {
    ParameterSet params;
    Rng rng(6);
    Parameter& w = params.create("w", Tensor::random_normal({3}, rng));
    AdamOptimizer optim(params.all(), {.lr = 0.01});
    for (int i = 0; i < 7; ++i) {
        w.value.ensure_grad();
        for (double& g : w.value.grad) g = 0.5;
        optim.step();
    }
    const EncoderConfig cfg{.depth = 1, .heads = 1, .dim = 4, .mlp_dim = 8, .n_max = 16};
    const CheckpointData data = snapshot_checkpoint(
        cfg, params.all(), nullptr,
        &optim, 64);
    const auto path = temp_path("mmt_ckpt_optim.mtfc");
    save_checkpoint(path.string(), data);

    ParameterSet fresh;
    Rng rng2(7);
    fresh.create("w", Tensor::random_normal({3}, rng2));
    AdamOptimizer restored(fresh.all(), {.lr = 0.01});
    const CheckpointData loaded = load_checkpoint(path.string());
    restore_parameters(loaded, fresh.all());
    restore_optimizer(loaded, restored);
    CHECK(restored.step_count() == 7);
    REQUIRE(restored.moments_by_name().count("w") == 1);
    const auto a = optim.moments_by_name().at("w");
    const auto b = restored.moments_by_name().at("w");
    CHECK(a->m.data == b->m.data);
    CHECK(a->v.data == b->v.data);
    std::filesystem::remove(path);
}
