#pragma once

// Test-side oracles, independent of the library's backward/selection code:
// central finite differences, brute-force greedy FPS, and full distance
// sorts. Expected values in the tests come from these, never from the
// implementation under test.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "mmt/tensor.hpp"

namespace oracle {

inline constexpr double kFdStep = 1e-5;

// Relative error with an absolute floor of 1e-4: below that scale the
// central difference itself is roundoff-dominated (loss values are O(1),
// so the FD noise floor sits near 1e-11).
inline double rel_err(double analytic, double numeric) {
    const double denom = std::max(std::abs(analytic) + std::abs(numeric), 1e-4);
    return std::abs(analytic - numeric) / denom;
}

inline mmt::Tensor fd_gradient(mmt::Tensor& x, const std::function<double()>& loss,
                               double h = kFdStep) {
    mmt::Tensor grad(x.shape);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = x.data[i];
        x.data[i] = saved + h;
        const double up = loss();
        x.data[i] = saved - h;
        const double down = loss();
        x.data[i] = saved;
        grad.data[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

inline double max_rel_err(const mmt::Tensor& analytic, const mmt::Tensor& numeric) {
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        worst = std::max(worst, rel_err(analytic.data[i], numeric.data[i]));
    }
    return worst;
}

inline double dist2(const mmt::Tensor& points, std::size_t a, std::size_t b) {
    const std::size_t w = points.cols();
    double acc = 0.0;
    for (int i = 0; i < 3; ++i) {
        const double d = points.data[a * w + i] - points.data[b * w + i];
        acc += d * d;
    }
    return acc;
}

// Exhaustive greedy FPS: each round scans every unselected candidate and
// recomputes its nearest selected distance from scratch.
inline std::vector<std::size_t> brute_force_fps(const mmt::Tensor& points, std::size_t count) {
    const std::size_t p = points.rows();
    std::vector<std::size_t> selected{0};
    std::vector<char> taken(p, 0);
    taken[0] = 1;
    while (selected.size() < count) {
        double best = -1.0;
        std::size_t best_idx = p;
        for (std::size_t i = 0; i < p; ++i) {
            if (taken[i]) continue;
            double nearest = std::numeric_limits<double>::infinity();
            for (std::size_t s : selected) nearest = std::min(nearest, dist2(points, i, s));
            if (nearest > best) {
                best = nearest;
                best_idx = i;
            }
        }
        taken[best_idx] = 1;
        selected.push_back(best_idx);
    }
    return selected;
}

// Full stable sort by (distance, index).
inline std::vector<std::size_t> sorted_neighbors(const mmt::Tensor& points, std::size_t center,
                                                 std::size_t k) {
    std::vector<std::pair<double, std::size_t>> order;
    for (std::size_t i = 0; i < points.rows(); ++i) order.emplace_back(dist2(points, i, center), i);
    std::sort(order.begin(), order.end());
    std::vector<std::size_t> out(k);
    for (std::size_t i = 0; i < k; ++i) out[i] = order[i].second;
    return out;
}

}  // namespace oracle
