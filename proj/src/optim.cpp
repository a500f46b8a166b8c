#include "mmt/optim.hpp"

#include <cmath>

namespace mmt {

AdamOptimizer::AdamOptimizer(std::vector<Parameter*> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {}

void AdamOptimizer::step() {
    ++step_count_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_count_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_count_));
    for (Parameter* p : params_) {
        if (!p->trainable) {
            moments_.erase(p);  // moment buffers exist only for trainable parameters
            continue;
        }
        Tensor& value = p->value;
        if (value.grad.size() != value.data.size()) {
            throw TrainingError("optimizer: missing gradient for trainable parameter '" + p->name +
                                "'");
        }
        auto [it, inserted] = moments_.try_emplace(p);
        if (inserted) {
            it->second.m = Tensor::zeros(value.shape);
            it->second.v = Tensor::zeros(value.shape);
        }
        Tensor& m = it->second.m;
        Tensor& v = it->second.v;
        for (std::size_t i = 0; i < value.size(); ++i) {
            const double g = value.grad[i];
            m.data[i] = cfg_.beta1 * m.data[i] + (1.0 - cfg_.beta1) * g;
            v.data[i] = cfg_.beta2 * v.data[i] + (1.0 - cfg_.beta2) * g * g;
            const double m_hat = m.data[i] / bc1;
            const double v_hat = v.data[i] / bc2;
            value.data[i] -= cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
        }
        value.zero_grad();
    }
}

void AdamOptimizer::zero_grads() {
    for (Parameter* p : params_) {
        p->value.ensure_grad();
        p->value.zero_grad();
    }
}

std::unordered_map<std::string, const AdamOptimizer::Moments*> AdamOptimizer::moments_by_name()
    const {
    std::unordered_map<std::string, const Moments*> out;
    for (const auto& [param, moments] : moments_) out.emplace(param->name, &moments);
    return out;
}

void AdamOptimizer::restore(std::uint64_t step_count,
                            const std::unordered_map<std::string, Moments>& moments) {
    step_count_ = step_count;
    moments_.clear();
    for (Parameter* p : params_) {
        auto it = moments.find(p->name);
        if (it == moments.end()) continue;
        if (!it->second.m.same_shape(p->value) || !it->second.v.same_shape(p->value)) {
            throw ShapeError("optimizer: restored moments for '" + p->name +
                             "' do not match parameter shape " + p->value.shape_string());
        }
        moments_[p] = it->second;
    }
}

}  // namespace mmt
