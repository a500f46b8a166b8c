#include "mmt/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mmt/rng.hpp"

namespace mmt {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

std::string shape_to_string(const std::vector<std::size_t>& shape) {
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out << 'x';
        out << shape[i];
    }
    out << ']';
    return out.str();
}

Tensor::Tensor(std::vector<std::size_t> s) : shape(std::move(s)), data(shape_product(shape), 0.0) {
    for (std::size_t d : shape) {
        if (d == 0) throw ShapeError("tensor: zero extent in shape " + shape_to_string(shape));
    }
}

Tensor::Tensor(std::vector<std::size_t> s, std::vector<double> values)
    : shape(std::move(s)), data(std::move(values)) {
    if (shape_product(shape) != data.size()) {
        throw ShapeError("tensor: shape " + shape_to_string(shape) + " does not match " +
                         std::to_string(data.size()) + " values");
    }
}

Tensor Tensor::full(std::vector<std::size_t> s, double value) {
    Tensor t(std::move(s));
    std::fill(t.data.begin(), t.data.end(), value);
    return t;
}

Tensor Tensor::identity(std::size_t n) {
    Tensor t({n, n});
    for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
    return t;
}

Tensor Tensor::random_normal(std::vector<std::size_t> s, Rng& rng, double stddev) {
    Tensor t(std::move(s));
    for (double& v : t.data) v = rng.normal() * stddev;
    return t;
}

Tensor Tensor::random_uniform(std::vector<std::size_t> s, Rng& rng, double lo, double hi) {
    Tensor t(std::move(s));
    for (double& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

std::size_t Tensor::dim(std::size_t i) const {
    if (i >= shape.size()) throw ShapeError("tensor: dim " + std::to_string(i) + " out of rank");
    return shape[i];
}

std::size_t Tensor::rows() const {
    if (rank() != 2) throw ShapeError("tensor: rows() needs rank 2, got " + shape_string());
    return shape[0];
}

std::size_t Tensor::cols() const {
    if (rank() != 2) throw ShapeError("tensor: cols() needs rank 2, got " + shape_string());
    return shape[1];
}

void Tensor::ensure_grad() {
    if (grad.empty()) grad.assign(data.size(), 0.0);
}

void Tensor::zero_grad() {
    std::fill(grad.begin(), grad.end(), 0.0);
}

bool Tensor::all_finite() const {
    for (double v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

std::string Tensor::shape_string() const { return shape_to_string(shape); }

void require_same_shape(const Tensor& a, const Tensor& b, const char* where) {
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(where) + ": shape mismatch " + a.shape_string() + " vs " +
                         b.shape_string());
    }
}

Tensor slice_rows(const Tensor& x, std::size_t row_begin, std::size_t row_end) {
    const std::size_t c = x.cols();
    if (row_begin > row_end || row_end > x.rows()) {
        throw ShapeError("slice_rows: range [" + std::to_string(row_begin) + ", " +
                         std::to_string(row_end) + ") out of " + x.shape_string());
    }
    Tensor out({row_end - row_begin, c});
    std::copy(x.data.begin() + static_cast<std::ptrdiff_t>(row_begin * c),
              x.data.begin() + static_cast<std::ptrdiff_t>(row_end * c), out.data.begin());
    return out;
}

Tensor vstack(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.cols()) {
        throw ShapeError("vstack: column mismatch " + a.shape_string() + " vs " + b.shape_string());
    }
    Tensor out({a.rows() + b.rows(), a.cols()});
    std::copy(a.data.begin(), a.data.end(), out.data.begin());
    std::copy(b.data.begin(), b.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(a.size()));
    return out;
}

}  // namespace mmt
