#pragma once

#include <cstdint>
#include <vector>

#include "tqe/tensor.hpp"

namespace tqe {

struct AdamState {
    std::int64_t t = 0;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    static AdamState init(const std::vector<Tensor>& params, double beta1 = 0.9,
                          double beta2 = 0.999, double epsilon = 1e-8);
};

// One Adam update with bias correction. An empty grad counts as all-zero.
void adam_step(std::vector<Tensor>& params, AdamState& state, double lr);

struct LrSchedule {
    double peak_lr = 2e-5;
    std::int64_t warmup_steps = 0;
    std::int64_t total_steps = 0;
};

// Linear ramp 0 -> peak over warmup_steps, constant peak afterwards.
double lr_at(const LrSchedule& schedule, std::int64_t step);

}  // namespace tqe
