#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "jcnp/tensor.hpp"

namespace jcnp {

/**
 * Records executed ops in execution order, which is a topological order of
 * the compute graph. backward() walks the record in reverse and calls each
 * node's rule exactly once; rules accumulate (add) into operand gradients so
 * a tensor consumed several times receives the sum of its per-use gradients.
 *
 * A tape with recording disabled turns every op into a plain forward
 * evaluation; inference uses that mode.
 */
template <typename Real>
class Tape {
public:
    using BackwardRule = std::function<void()>;

    explicit Tape(bool recording = true) : recording_(recording) {}

    bool recording() const noexcept { return recording_; }
    void set_recording(bool on) noexcept { recording_ = on; }

    /// True when an op over these operands must be recorded.
    bool wants(std::initializer_list<const Tensor<Real>*> inputs) const;

    void record(std::vector<Tensor<Real>> inputs, Tensor<Real> output, BackwardRule rule);

    /// Seeds d(loss)/d(loss) = 1 and runs every recorded rule in reverse.
    /// Throws std::logic_error for a non-scalar or unrecorded loss.
    void backward(const Tensor<Real>& loss);

    std::size_t size() const noexcept { return nodes_.size(); }
    /// Number of rules executed by the most recent backward().
    std::size_t last_visit_count() const noexcept { return visited_; }
    void clear() { nodes_.clear(); }

private:
    struct Node {
        std::vector<Tensor<Real>> inputs;
        Tensor<Real> output;
        BackwardRule rule;
    };
    std::vector<Node> nodes_;
    bool recording_;
    std::size_t visited_ = 0;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace jcnp
