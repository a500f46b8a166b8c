#include "mmt/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mmt {

namespace {

void require_allocated(const Tensor& ref, const Tensor& target, const char* where) {
    if (!target.same_shape(ref)) {
        throw ShapeError(std::string(where) + ": gradient buffer shape " + target.shape_string() +
                         " does not match " + ref.shape_string());
    }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    const std::size_t m = a.rows(), k = a.cols();
    if (b.rows() != k) {
        throw ShapeError("matmul: inner extents differ, " + a.shape_string() + " vs " +
                         b.shape_string());
    }
    const std::size_t n = b.cols();
    Tensor c({m, n});
    // i-k-j order keeps the inner loop contiguous in both b and c
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = &a.data[i * k];
        double* crow = &c.data[i * n];
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double av = arow[kk];
            if (av == 0.0) continue;
            const double* brow = &b.data[kk * n];
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
    return c;
}

void matmul_backward(const Tensor& a, const Tensor& b, const Tensor& d_out, Tensor* d_a,
                     Tensor* d_b) {
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    if (d_out.rows() != m || d_out.cols() != n) {
        throw ShapeError("matmul_backward: upstream shape " + d_out.shape_string() +
                         " does not match " + a.shape_string() + " x " + b.shape_string());
    }
    if (d_a) {
        require_allocated(a, *d_a, "matmul_backward(dA)");
        for (std::size_t i = 0; i < m; ++i) {
            const double* drow = &d_out.data[i * n];
            double* darow = &d_a->data[i * k];
            for (std::size_t kk = 0; kk < k; ++kk) {
                const double* brow = &b.data[kk * n];
                double acc = 0.0;
                for (std::size_t j = 0; j < n; ++j) acc += drow[j] * brow[j];
                darow[kk] += acc;
            }
        }
    }
    if (d_b) {
        require_allocated(b, *d_b, "matmul_backward(dB)");
        for (std::size_t kk = 0; kk < k; ++kk) {
            double* dbrow = &d_b->data[kk * n];
            for (std::size_t i = 0; i < m; ++i) {
                const double av = a.data[i * k + kk];
                if (av == 0.0) continue;
                const double* drow = &d_out.data[i * n];
                for (std::size_t j = 0; j < n; ++j) dbrow[j] += av * drow[j];
            }
        }
    }
}

Tensor softmax_rows(const Tensor& x) {
    const std::size_t m = x.rows(), n = x.cols();
    Tensor y({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        const double* row = &x.data[i * n];
        double* out = &y.data[i * n];
        const double mx = *std::max_element(row, row + n);
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            out[j] = std::exp(row[j] - mx);
            sum += out[j];
        }
        const double inv = 1.0 / sum;
        for (std::size_t j = 0; j < n; ++j) out[j] *= inv;
    }
    return y;
}

void softmax_rows_backward(const Tensor& y, const Tensor& d_y, Tensor& d_x) {
    require_same_shape(y, d_y, "softmax_rows_backward");
    require_allocated(y, d_x, "softmax_rows_backward(dX)");
    const std::size_t m = y.rows(), n = y.cols();
    for (std::size_t i = 0; i < m; ++i) {
        const double* yr = &y.data[i * n];
        const double* dr = &d_y.data[i * n];
        double* dx = &d_x.data[i * n];
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) dot += yr[j] * dr[j];
        for (std::size_t j = 0; j < n; ++j) dx[j] += yr[j] * (dr[j] - dot);
    }
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps,
                  LayerNormCtx* ctx) {
    const std::size_t m = x.rows(), d = x.cols();
    if (gamma.size() != d || beta.size() != d) {
        throw ShapeError("layer_norm: affine shapes " + gamma.shape_string() + "/" +
                         beta.shape_string() + " do not match width " + std::to_string(d));
    }
    Tensor y({m, d});
    Tensor x_hat({m, d});
    std::vector<double> inv_std(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double* row = &x.data[i * d];
        double mean = 0.0;
        for (std::size_t j = 0; j < d; ++j) mean += row[j];
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double c = row[j] - mean;
            var += c * c;
        }
        var /= static_cast<double>(d);
        const double s = 1.0 / std::sqrt(var + eps);
        inv_std[i] = s;
        double* hat = &x_hat.data[i * d];
        double* out = &y.data[i * d];
        for (std::size_t j = 0; j < d; ++j) {
            hat[j] = (row[j] - mean) * s;
            out[j] = hat[j] * gamma.data[j] + beta.data[j];
        }
    }
    if (ctx) {
        ctx->x_hat = std::move(x_hat);
        ctx->inv_std = std::move(inv_std);
    }
    return y;
}

void layer_norm_backward(const LayerNormCtx& ctx, const Tensor& gamma, const Tensor& d_y,
                         Tensor* d_x, Tensor* d_gamma, Tensor* d_beta) {
    const Tensor& x_hat = ctx.x_hat;
    require_same_shape(x_hat, d_y, "layer_norm_backward");
    const std::size_t m = x_hat.rows(), d = x_hat.cols();
    const double inv_d = 1.0 / static_cast<double>(d);
    for (std::size_t i = 0; i < m; ++i) {
        const double* hat = &x_hat.data[i * d];
        const double* dy = &d_y.data[i * d];
        if (d_gamma) {
            for (std::size_t j = 0; j < d; ++j) d_gamma->data[j] += dy[j] * hat[j];
        }
        if (d_beta) {
            for (std::size_t j = 0; j < d; ++j) d_beta->data[j] += dy[j];
        }
        if (d_x) {
            // dxhat = dy .* gamma; dx = s * (dxhat - mean(dxhat) - xhat * mean(dxhat .* xhat))
            double mean_dhat = 0.0, mean_dhat_hat = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double dh = dy[j] * gamma.data[j];
                mean_dhat += dh;
                mean_dhat_hat += dh * hat[j];
            }
            mean_dhat *= inv_d;
            mean_dhat_hat *= inv_d;
            const double s = ctx.inv_std[i];
            double* dx = &d_x->data[i * d];
            for (std::size_t j = 0; j < d; ++j) {
                const double dh = dy[j] * gamma.data[j];
                dx[j] += s * (dh - mean_dhat - hat[j] * mean_dhat_hat);
            }
        }
    }
}

namespace {
constexpr double kInvSqrt2 = 1.0 / std::numbers::sqrt2;
}

double gelu_scalar(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }

double gelu_grad_scalar(double x) {
    const double phi = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
    const double density = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    return phi + x * density;
}

Tensor gelu(const Tensor& x) {
    Tensor y = x;
    y.grad.clear();
    for (double& v : y.data) v = gelu_scalar(v);
    return y;
}

void gelu_backward(const Tensor& x, const Tensor& d_y, Tensor& d_x) {
    require_same_shape(x, d_y, "gelu_backward");
    require_allocated(x, d_x, "gelu_backward(dX)");
    for (std::size_t i = 0; i < x.size(); ++i) {
        d_x.data[i] += d_y.data[i] * gelu_grad_scalar(x.data[i]);
    }
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
    if (b.size() != w.cols()) {
        throw ShapeError("linear: bias " + b.shape_string() + " does not match weight " +
                         w.shape_string());
    }
    Tensor y = matmul(x, w);
    const std::size_t n = y.rows(), out = y.cols();
    for (std::size_t i = 0; i < n; ++i) {
        double* row = &y.data[i * out];
        for (std::size_t j = 0; j < out; ++j) row[j] += b.data[j];
    }
    return y;
}

void linear_backward(const Tensor& x, const Tensor& w, const Tensor& d_y, Tensor* d_x, Tensor* d_w,
                     Tensor* d_b) {
    matmul_backward(x, w, d_y, d_x, d_w);
    if (d_b) {
        const std::size_t n = d_y.rows(), out = d_y.cols();
        if (d_b->size() != out) {
            throw ShapeError("linear_backward: bias gradient shape " + d_b->shape_string());
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double* row = &d_y.data[i * out];
            for (std::size_t j = 0; j < out; ++j) d_b->data[j] += row[j];
        }
    }
}

double cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
    const std::size_t batch = logits.rows(), classes = logits.cols();
    if (labels.size() != batch) {
        throw ShapeError("cross_entropy: " + std::to_string(labels.size()) + " labels for batch " +
                         std::to_string(batch));
    }
    double total = 0.0;
    for (std::size_t i = 0; i < batch; ++i) {
        const int label = labels[i];
        if (label < 0 || static_cast<std::size_t>(label) >= classes) {
            throw DataError("cross_entropy: label " + std::to_string(label) + " outside [0, " +
                            std::to_string(classes) + ")");
        }
        const double* row = &logits.data[i * classes];
        const double mx = *std::max_element(row, row + classes);
        double sum = 0.0;
        for (std::size_t j = 0; j < classes; ++j) sum += std::exp(row[j] - mx);
        total += std::log(sum) + mx - row[label];
    }
    return total / static_cast<double>(batch);
}

void cross_entropy_backward(const Tensor& logits, const std::vector<int>& labels,
                            Tensor& d_logits) {
    require_allocated(logits, d_logits, "cross_entropy_backward");
    const std::size_t batch = logits.rows(), classes = logits.cols();
    const Tensor probs = softmax_rows(logits);
    const double inv_b = 1.0 / static_cast<double>(batch);
    for (std::size_t i = 0; i < batch; ++i) {
        const int label = labels[i];
        if (label < 0 || static_cast<std::size_t>(label) >= classes) {
            throw DataError("cross_entropy_backward: label " + std::to_string(label) +
                            " outside [0, " + std::to_string(classes) + ")");
        }
        for (std::size_t j = 0; j < classes; ++j) {
            double g = probs.data[i * classes + j];
            if (static_cast<std::size_t>(label) == j) g -= 1.0;
            d_logits.data[i * classes + j] += g * inv_b;
        }
    }
}

}  // namespace mmt
