#include "jcnp/optimizer.hpp"

#include <cmath>

namespace jcnp {

double LearningRateSchedule::at(std::int64_t step) const {
    const std::int64_t interval = decay_interval_steps > 0 ? decay_interval_steps : 1;
    return base_lr * std::pow(decay_factor, static_cast<double>(step / interval));
}

OptimizerKind parse_optimizer_kind(const std::string& name) {
    if (name == "adam") return OptimizerKind::Adam;
    if (name == "sgd") return OptimizerKind::Sgd;
    throw std::invalid_argument("unknown optimizer '" + name + "' (expected adam or sgd)");
}

std::string to_string(OptimizerKind kind) {
    return kind == OptimizerKind::Adam ? "adam" : "sgd";
}

template <typename Real>
Optimizer<Real>::Optimizer(std::vector<NamedParameter<Real>> params, LearningRateSchedule schedule,
                           OptimizerKind kind)
    : params_(std::move(params)), schedule_(schedule), kind_(kind) {
    if (kind_ == OptimizerKind::Adam) {
        for (const auto& p : params_) {
            first_moment_.emplace_back(p.tensor.numel(), Real(0));
            second_moment_.emplace_back(p.tensor.numel(), Real(0));
        }
    }
}

template <typename Real>
void Optimizer<Real>::step() {
    for (const auto& p : params_) {
        if (!p.tensor.has_grad()) {
            throw MissingGradientError("parameter '" + p.name + "' has no gradient buffer");
        }
    }
    const double lr = schedule_.at(step_);
    ++step_;

    if (kind_ == OptimizerKind::Sgd) {
        for (auto& p : params_) {
            auto values = p.tensor.data();
            auto grads = p.tensor.grad();
            for (std::size_t i = 0; i < values.size(); ++i) {
                values[i] -= static_cast<Real>(lr * grads[i]);
            }
        }
        return;
    }

    const double t = static_cast<double>(step_);
    const double bias1 = 1.0 - std::pow(kBeta1, t);
    const double bias2 = 1.0 - std::pow(kBeta2, t);
    const Real step_size = static_cast<Real>(lr / bias1);
    const Real bias2_sqrt = static_cast<Real>(std::sqrt(bias2));
    const Real b1 = static_cast<Real>(kBeta1), b2 = static_cast<Real>(kBeta2);
    const Real eps = static_cast<Real>(kEpsilon);
    for (std::size_t k = 0; k < params_.size(); ++k) {
        auto values = params_[k].tensor.data();
        auto grads = params_[k].tensor.grad();
        auto& m = first_moment_[k];
        auto& v = second_moment_[k];
        for (std::size_t i = 0; i < values.size(); ++i) {
            const Real g = grads[i];
            m[i] = b1 * m[i] + (Real(1) - b1) * g;
            v[i] = b2 * v[i] + (Real(1) - b2) * g * g;
            values[i] -= step_size * m[i] / (std::sqrt(v[i]) / bias2_sqrt + eps);
        }
    }
}

template <typename Real>
void Optimizer<Real>::zero_grad() {
    for (auto& p : params_) p.tensor.zero_grad();
}

template class Optimizer<float>;
template class Optimizer<double>;

}  // namespace jcnp
