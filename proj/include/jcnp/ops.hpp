#pragma once

#include <cstddef>

#include "jcnp/autograd.hpp"
#include "jcnp/tensor.hpp"

namespace jcnp {

// Differentiable operators. Every op checks its shape contract and throws
// DimensionError on violation. Outputs track gradients iff some operand does
// and the tape is recording.

/// 3x3 convolution, stride 1, zero padding 1. x: [B,Cin,H,W], w: [Cout,Cin,3,3],
/// b: [Cout] -> [B,Cout,H,W].
template <typename Real>
Tensor<Real> conv2d(Tape<Real>& tape, const Tensor<Real>& x, const Tensor<Real>& w,
                    const Tensor<Real>& b);

/// Per-channel parametric ReLU over dim 1 of x. alpha: [C].
template <typename Real>
Tensor<Real> prelu(Tape<Real>& tape, const Tensor<Real>& x, const Tensor<Real>& alpha);

/// 2x2 max pooling, stride 2. H and W must be even. The gradient goes to the
/// first maximal element of each window in row-major order.
template <typename Real>
Tensor<Real> maxpool2(Tape<Real>& tape, const Tensor<Real>& x);

/**
 * Transposed 3x3 convolution with stride 2. x: [B,Cin,H,W], w: [Cin,Cout,3,3],
 * b: [Cout] -> [B,Cout,2H,2W].
 *
 * Geometry (padding 1, output padding 1): input pixel (i, j) scattered through
 * tap (ky, kx) lands on output (2i + ky - 1, 2j + kx - 1); taps landing outside
 * [0, 2H) x [0, 2W) are dropped. Tap (0, *) of row 0 is therefore cropped, and
 * output row 2H - 1 only receives taps with ky = 2.
 */
template <typename Real>
Tensor<Real> deconv2d(Tape<Real>& tape, const Tensor<Real>& x, const Tensor<Real>& w,
                      const Tensor<Real>& b);

/// Channel concatenation; channels of a precede channels of b.
template <typename Real>
Tensor<Real> concat_channels(Tape<Real>& tape, const Tensor<Real>& a, const Tensor<Real>& b);

/// Channels [begin, end) of x.
template <typename Real>
Tensor<Real> slice_channels(Tape<Real>& tape, const Tensor<Real>& x, std::size_t begin,
                            std::size_t end);

template <typename Real>
Tensor<Real> add(Tape<Real>& tape, const Tensor<Real>& a, const Tensor<Real>& b);

/// Sum of all elements as a 1-element tensor.
template <typename Real>
Tensor<Real> sum(Tape<Real>& tape, const Tensor<Real>& x);

/// Mean over all elements of (pred - gt)^2. gt never receives a gradient.
template <typename Real>
Tensor<Real> mse_loss(Tape<Real>& tape, const Tensor<Real>& pred, const Tensor<Real>& gt);

}  // namespace jcnp
