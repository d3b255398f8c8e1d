#include "jcnp/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <sstream>

namespace jcnp {

std::size_t shape_numel(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out << 'x';
        out << shape[i];
    }
    out << ']';
    return out.str();
}

template <typename Real>
Tensor<Real> Tensor<Real>::zeros(Shape shape, bool requires_grad) {
    return full(std::move(shape), Real(0), requires_grad);
}

template <typename Real>
Tensor<Real> Tensor<Real>::full(Shape shape, Real value, bool requires_grad) {
    const std::size_t n = shape_numel(shape);
    return from(std::move(shape), std::vector<Real>(n, value), requires_grad);
}

template <typename Real>
Tensor<Real> Tensor<Real>::from(Shape shape, std::vector<Real> values, bool requires_grad) {
    if (shape_numel(shape) != values.size()) {
        throw DimensionError("tensor shape " + shape_str(shape) + " does not hold " +
                             std::to_string(values.size()) + " values");
    }
    Tensor t;
    t.impl_ = std::make_shared<Storage>();
    t.impl_->shape = std::move(shape);
    t.impl_->data = std::move(values);
    t.impl_->requires_grad = requires_grad;
    if (requires_grad) t.impl_->grad.assign(t.impl_->data.size(), Real(0));
    return t;
}

template <typename Real>
Real Tensor<Real>::item() const {
    if (numel() != 1) {
        throw DimensionError("item() on tensor of shape " + shape_str(shape()));
    }
    return impl_->data[0];
}

template <typename Real>
std::span<Real> Tensor<Real>::ensure_grad() const {
    if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), Real(0));
    return impl_->grad;
}

template <typename Real>
void Tensor<Real>::zero_grad() {
    if (impl_ && !impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), Real(0));
}

template <typename Real>
Tensor<Real> Tensor<Real>::detach() const {
    return from(impl_->shape, impl_->data, false);
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace jcnp
