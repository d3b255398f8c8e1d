#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "jcnp/tensor.hpp"

namespace jcnp {

/// Step-decayed learning rate: base_lr * decay_factor^floor(step / interval).
struct LearningRateSchedule {
    double base_lr = 1e-3;
    double decay_factor = 0.8;
    std::int64_t decay_interval_steps = 10000;

    double at(std::int64_t step) const;
};

enum class OptimizerKind { Adam, Sgd };

OptimizerKind parse_optimizer_kind(const std::string& name);
std::string to_string(OptimizerKind kind);

class MissingGradientError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

template <typename Real>
struct NamedParameter {
    std::string name;
    Tensor<Real> tensor;
};

/**
 * Adaptive-moment optimizer (beta1 0.9, beta2 0.999, eps 1e-8) with bias
 * correction, driven by a step-decay schedule. OptimizerKind::Sgd swaps the
 * update for plain gradient descent under the same schedule.
 *
 * step() uses the learning rate of the current step counter, then
 * increments the counter.
 */
template <typename Real>
class Optimizer {
public:
    Optimizer(std::vector<NamedParameter<Real>> params, LearningRateSchedule schedule,
              OptimizerKind kind = OptimizerKind::Adam);

    void step();
    void zero_grad();

    std::int64_t step_count() const noexcept { return step_; }
    double current_lr() const { return schedule_.at(step_); }
    const LearningRateSchedule& schedule() const noexcept { return schedule_; }
    OptimizerKind kind() const noexcept { return kind_; }

    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEpsilon = 1e-8;

private:
    std::vector<NamedParameter<Real>> params_;
    std::vector<std::vector<Real>> first_moment_;
    std::vector<std::vector<Real>> second_moment_;
    LearningRateSchedule schedule_;
    OptimizerKind kind_;
    std::int64_t step_ = 0;
};

extern template class Optimizer<float>;
extern template class Optimizer<double>;

}  // namespace jcnp
