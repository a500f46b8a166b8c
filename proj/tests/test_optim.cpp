#include <doctest.h>

#include <cmath>

#include "mmt/optim.hpp"
#include "mmt/rng.hpp"

using namespace mmt;

TEST_CASE("first Adam step moves a unit-gradient scalar by ~lr") {
    ParameterSet params;
    Parameter& p = params.create("w", Tensor({1}, {1.0}));
    p.value.ensure_grad();
    p.value.grad[0] = 1.0;

    AdamOptimizer optim(params.all(), {.lr = 0.1});
    optim.step();
    // bias-corrected first step: lr * g / (|g| + eps)
    CHECK(p.value.data[0] == doctest::Approx(0.9).epsilon(1e-6));
    CHECK(optim.step_count() == 1);
    CHECK(p.value.grad[0] == 0.0);  // gradients cleared after apply
}

TEST_CASE("frozen parameters are bitwise untouched and hold no moments") {
    ParameterSet params;
    Parameter& frozen = params.create("frozen", Tensor({2}, {1.5, -2.25}), false);
    Parameter& live = params.create("live", Tensor({1}, {1.0}));
    frozen.value.ensure_grad();
    frozen.value.grad = {10.0, 10.0};
    live.value.ensure_grad();
    live.value.grad[0] = 1.0;

    const std::vector<double> before = frozen.value.data;
    AdamOptimizer optim(params.all(), {.lr = 0.5});
    for (int i = 0; i < 10; ++i) {
        live.value.grad[0] = 1.0;
        optim.step();
    }
    CHECK(frozen.value.data == before);  // bitwise
    CHECK(optim.moments_by_name().count("frozen") == 0);
    CHECK(optim.moments_by_name().count("live") == 1);
}

TEST_CASE("missing gradient on a trainable parameter raises a training error") {
    ParameterSet params;
    params.create("w", Tensor({3}));
    AdamOptimizer optim(params.all());
    CHECK_THROWS_WITH_AS(optim.step(), doctest::Contains("w"), TrainingError);
}

TEST_CASE("100 Adam steps on (w-3)^2 converge and match the scalar recurrence") {
    ParameterSet params;
    Parameter& p = params.create("w", Tensor({1}, {0.0}));
    AdamOptimizer optim(params.all(), {.lr = 0.1});

    // independent scalar recurrence with the same constants
    double w = 0.0, m = 0.0, v = 0.0;
    const double lr = 0.1, b1 = 0.9, b2 = 0.999, eps = 1e-8;

    for (int t = 1; t <= 100; ++t) {
        const double g = 2.0 * (p.value.data[0] - 3.0);
        p.value.ensure_grad();
        p.value.grad[0] = g;
        optim.step();

        const double og = 2.0 * (w - 3.0);
        m = b1 * m + (1 - b1) * og;
        v = b2 * v + (1 - b2) * og * og;
        const double mh = m / (1 - std::pow(b1, t));
        const double vh = v / (1 - std::pow(b2, t));
        w -= lr * mh / (std::sqrt(vh) + eps);
    }
    CHECK(std::abs(p.value.data[0] - 3.0) < 0.1);
    CHECK(p.value.data[0] == doctest::Approx(w).epsilon(1e-12));
}

TEST_CASE("step count advances by exactly one per apply") {
    ParameterSet params;
    Parameter& p = params.create("w", Tensor({1}, {0.5}));
    AdamOptimizer optim(params.all());
    for (std::uint64_t i = 1; i <= 5; ++i) {
        p.value.ensure_grad();
        p.value.grad[0] = 0.25;
        optim.step();
        CHECK(optim.step_count() == i);
    }
}

TEST_CASE("duplicate parameter names are rejected within a set") {
    ParameterSet params;
    params.create("w", Tensor({1}));
    CHECK_THROWS_AS(params.create("w", Tensor({2})), ArgumentError);
}
