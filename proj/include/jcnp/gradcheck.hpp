#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

#include "jcnp/autograd.hpp"
#include "jcnp/tensor.hpp"

namespace jcnp {

/// A scalar-valued function of tensors it closes over. It must build its
/// result through the given tape so it can be differentiated.
template <typename Real>
using ScalarFunction = std::function<Tensor<Real>(Tape<Real>&)>;

struct GradCheckOptions {
    double eps = 1e-4;
    /// 0 checks every coordinate; otherwise a seeded sample of this many.
    std::size_t max_coords = 0;
    std::uint64_t seed = 0;
};

/**
 * Compares the tape gradient of f with respect to x against central
 * differences (f(x + eps e_i) - f(x - eps e_i)) / (2 eps), coordinate by
 * coordinate. Returns the largest relative error, using
 * max(|analytic|, |numeric|, 1e-8) as denominator.
 *
 * x must require gradients; its values are perturbed in place and restored.
 */
template <typename Real>
double finite_diff_check(const ScalarFunction<Real>& f, Tensor<Real>& x,
                         const GradCheckOptions& options = {});

}  // namespace jcnp
