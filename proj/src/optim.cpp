#include "tqe/optim.hpp"

#include <cmath>

namespace tqe {

AdamState AdamState::init(const std::vector<Tensor>& params, double beta1, double beta2,
                          double epsilon) {
    if (beta1 <= 0.0 || beta1 >= 1.0 || beta2 <= 0.0 || beta2 >= 1.0)
        throw InvalidConfig("AdamState: betas must be in (0, 1)");
    AdamState s;
    s.beta1 = beta1;
    s.beta2 = beta2;
    s.epsilon = epsilon;
    s.m.reserve(params.size());
    s.v.reserve(params.size());
    for (const auto& p : params) {
        s.m.emplace_back(p.numel(), 0.0);
        s.v.emplace_back(p.numel(), 0.0);
    }
    return s;
}

void adam_step(std::vector<Tensor>& params, AdamState& state, double lr) {
    if (state.m.size() != params.size() || state.v.size() != params.size())
        throw ShapeMismatch("adam_step: state size does not match parameter count");
    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto& p = params[k].values();
        auto& m = state.m[k];
        auto& v = state.v[k];
        if (m.size() != p.size())
            throw ShapeMismatch("adam_step: moment shape does not match parameter");
        const bool has_grad = params[k].has_grad();
        if (has_grad && params[k].grad().size() != p.size())
            throw ShapeMismatch("adam_step: gradient shape does not match parameter");
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double g = has_grad ? params[k].grad()[i] : 0.0;
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p[i] -= lr * mhat / (std::sqrt(vhat) + state.epsilon);
        }
    }
}

double lr_at(const LrSchedule& schedule, std::int64_t step) {
    if (schedule.peak_lr <= 0.0) throw InvalidConfig("LrSchedule: peak_lr must be > 0");
    if (schedule.warmup_steps < 0 || schedule.warmup_steps > schedule.total_steps)
        throw InvalidConfig("LrSchedule: need 0 <= warmup_steps <= total_steps");
    if (step < 0 || step > schedule.total_steps)
        throw StepOutOfRange("lr_at: step outside [0, total_steps]");
    if (step >= schedule.warmup_steps) return schedule.peak_lr;
    return schedule.peak_lr * static_cast<double>(step) /
           static_cast<double>(schedule.warmup_steps);
}

}  // namespace tqe
