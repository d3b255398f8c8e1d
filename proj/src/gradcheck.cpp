#include "jcnp/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

namespace jcnp {

template <typename Real>
double finite_diff_check(const ScalarFunction<Real>& f, Tensor<Real>& x,
                         const GradCheckOptions& options) {
    if (!x.requires_grad()) {
        throw std::invalid_argument("finite_diff_check: x must require gradients");
    }

    x.zero_grad();
    {
        Tape<Real> tape;
        const Tensor<Real> y = f(tape);
        // A result that does not depend on x leaves the zeroed gradient as is.
        if (y.requires_grad()) tape.backward(y);
    }
    const std::vector<Real> analytic(x.grad().begin(), x.grad().end());

    std::vector<std::size_t> coords(x.numel());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (options.max_coords != 0 && options.max_coords < coords.size()) {
        std::mt19937_64 rng(options.seed);
        std::shuffle(coords.begin(), coords.end(), rng);
        coords.resize(options.max_coords);
        std::sort(coords.begin(), coords.end());
    }

    auto evaluate = [&]() {
        Tape<Real> tape(false);
        return static_cast<double>(f(tape).item());
    };

    const Real eps = static_cast<Real>(options.eps);
    double worst = 0.0;
    for (std::size_t i : coords) {
        Real& v = x.data()[i];
        const Real saved = v;
        v = saved + eps;
        const double up = evaluate();
        v = saved - eps;
        const double down = evaluate();
        v = saved;
        const double numeric = (up - down) / (2.0 * options.eps);
        const double a = analytic[i];
        const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
        worst = std::max(worst, std::abs(a - numeric) / denom);
    }
    return worst;
}

template double finite_diff_check(const ScalarFunction<float>&, Tensor<float>&,
                                  const GradCheckOptions&);
template double finite_diff_check(const ScalarFunction<double>&, Tensor<double>&,
                                  const GradCheckOptions&);

}  // namespace jcnp
