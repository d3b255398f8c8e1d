#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace jcnp {

using Shape = std::vector<std::size_t>;

/// Raised when operand shapes do not satisfy an op's contract.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/**
 * Dense row-major tensor handle.
 *
 * Copies share storage, which is what lets the tape hold on to the operands
 * of a recorded op. 4-D activations are laid out (batch, channels, height,
 * width); convolution weights are (out, in, kh, kw) and transposed
 * convolution weights are (in, out, kh, kw).
 *
 * A gradient buffer exists iff requires_grad() is set. Leaf tensors get a
 * zeroed buffer on construction; op outputs get theirs lazily when the tape
 * first propagates into them.
 */
template <typename Real>
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, Real value, bool requires_grad = false);
    static Tensor from(Shape shape, std::vector<Real> values, bool requires_grad = false);

    bool defined() const noexcept { return impl_ != nullptr; }
    const Shape& shape() const { return impl_->shape; }
    std::size_t dim(std::size_t axis) const { return impl_->shape.at(axis); }
    std::size_t rank() const { return impl_->shape.size(); }
    std::size_t numel() const { return impl_->data.size(); }

    std::span<Real> data() { return impl_->data; }
    std::span<const Real> data() const { return impl_->data; }
    Real item() const;

    bool requires_grad() const noexcept { return impl_ && impl_->requires_grad; }
    bool has_grad() const noexcept { return impl_ && !impl_->grad.empty(); }
    std::span<Real> grad() { return impl_->grad; }
    std::span<const Real> grad() const { return impl_->grad; }
    /// Allocates a zeroed gradient buffer if none exists yet. Const because
    /// the buffer belongs to the shared storage, not to the handle.
    std::span<Real> ensure_grad() const;
    void zero_grad();

    /// Deep copy with no gradient tracking.
    Tensor detach() const;

    bool same(const Tensor& other) const noexcept { return impl_ == other.impl_; }

private:
    struct Storage {
        Shape shape;
        std::vector<Real> data;
        std::vector<Real> grad;
        bool requires_grad = false;
    };
    std::shared_ptr<Storage> impl_;
};

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace jcnp
