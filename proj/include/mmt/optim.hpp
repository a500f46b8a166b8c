#pragma once

#include <cstdint>
#include <unordered_map>

#include "mmt/params.hpp"

namespace mmt {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Adam with bias correction. Frozen parameters are never touched and hold
// no moment buffers; gradients of updated parameters are cleared after
// each step.
class AdamOptimizer {
public:
    explicit AdamOptimizer(std::vector<Parameter*> params, AdamConfig cfg = {});

    void step();
    void zero_grads();

    std::uint64_t step_count() const { return step_count_; }
    const AdamConfig& config() const { return cfg_; }
    const std::vector<Parameter*>& params() const { return params_; }

    struct Moments {
        Tensor m;
        Tensor v;
    };

    // Checkpoint access: moments keyed by parameter name, plus step count.
    std::unordered_map<std::string, const Moments*> moments_by_name() const;
    void restore(std::uint64_t step_count,
                 const std::unordered_map<std::string, Moments>& moments);

private:
    std::vector<Parameter*> params_;
    std::unordered_map<Parameter*, Moments> moments_;
    std::uint64_t step_count_ = 0;
    AdamConfig cfg_;
};

}  // namespace mmt
