#include "jcnp/autograd.hpp"

#include <stdexcept>

namespace jcnp {

template <typename Real>
bool Tape<Real>::wants(std::initializer_list<const Tensor<Real>*> inputs) const {
    if (!recording_) return false;
    for (const auto* t : inputs) {
        if (t->requires_grad()) return true;
    }
    return false;
}

template <typename Real>
void Tape<Real>::record(std::vector<Tensor<Real>> inputs, Tensor<Real> output,
                        BackwardRule rule) {
    nodes_.push_back(Node{std::move(inputs), std::move(output), std::move(rule)});
}

template <typename Real>
void Tape<Real>::backward(const Tensor<Real>& loss) {
    if (!loss.defined() || loss.numel() != 1) {
        throw std::logic_error("backward() needs a scalar loss");
    }
    if (!loss.requires_grad()) {
        throw std::logic_error("backward() on a loss that was not recorded on this tape");
    }
    Tensor<Real> seed = loss;
    seed.ensure_grad()[0] += Real(1);

    visited_ = 0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        ++visited_;
        // Unreached nodes have no output gradient; their operands stay untouched.
        if (!it->output.has_grad()) continue;
        it->rule();
    }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace jcnp
