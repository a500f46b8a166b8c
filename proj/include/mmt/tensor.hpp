#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mmt/error.hpp"

namespace mmt {

class Rng;

// Dense row-major tensor of doubles with an optional same-shape gradient
// buffer. This is the sole numeric currency of the project; every layer
// below speaks Tensor in and Tensor out.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;
    std::vector<double> grad;  // empty when absent; data.size() when allocated

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s);
    Tensor(std::vector<std::size_t> s, std::vector<double> values);

    static Tensor zeros(std::vector<std::size_t> s) { return Tensor(std::move(s)); }
    static Tensor full(std::vector<std::size_t> s, double value);
    static Tensor identity(std::size_t n);
    static Tensor random_normal(std::vector<std::size_t> s, Rng& rng, double stddev = 1.0);
    static Tensor random_uniform(std::vector<std::size_t> s, Rng& rng, double lo, double hi);

    std::size_t size() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    std::size_t dim(std::size_t i) const;

    // 2-D accessors; most layer math works on n x D matrices.
    std::size_t rows() const;
    std::size_t cols() const;
    double& operator()(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

    bool has_grad() const { return !grad.empty(); }
    void ensure_grad();        // allocate zeros if absent
    void zero_grad();          // keep allocation, fill 0
    void drop_grad() { grad.clear(); grad.shrink_to_fit(); }

    bool all_finite() const;
    bool same_shape(const Tensor& other) const { return shape == other.shape; }
    std::string shape_string() const;
};

std::size_t shape_product(const std::vector<std::size_t>& shape);
std::string shape_to_string(const std::vector<std::size_t>& shape);

// Throws ShapeError naming both shapes unless they match.
void require_same_shape(const Tensor& a, const Tensor& b, const char* where);

// Row slice view copies: [row_begin, row_end) of a 2-D tensor.
Tensor slice_rows(const Tensor& x, std::size_t row_begin, std::size_t row_end);
// Stack b below a (both 2-D with equal column counts).
Tensor vstack(const Tensor& a, const Tensor& b);

}  // namespace mmt
