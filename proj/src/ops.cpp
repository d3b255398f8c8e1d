#include "jcnp/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include "blas.hpp"

namespace jcnp {
namespace {

constexpr std::size_t kTaps = 9;

// Grow-only per-thread buffers. Slot 0 holds column matrices, slot 1 holds
// gathered activations; an op never needs more than two at once.
template <typename Real>
Real* scratch(int slot, std::size_t n) {
    thread_local std::vector<Real> buffers[2];
    auto& buf = buffers[slot];
    if (buf.size() < n) buf.resize(n);
    return buf.data();
}

void require(bool ok, const std::string& message) {
    if (!ok) throw DimensionError(message);
}

template <typename Real>
void require_rank4(const Tensor<Real>& t, const char* op, const char* what) {
    require(t.defined() && t.rank() == 4, std::string(op) + ": " + what + " must be 4-D, got " +
                                              (t.defined() ? shape_str(t.shape()) : "undefined"));
}

template <typename Real>
void check_finite([[maybe_unused]] const Tensor<Real>& t, [[maybe_unused]] const char* op) {
#ifndef NDEBUG
    for (Real v : t.data()) {
        if (!std::isfinite(v)) throw std::runtime_error(std::string(op) + " produced a non-finite value");
    }
#endif
}

// col[(c*9 + ky*3 + kx), b*H*W + y*W + x] = x[b, c, y+ky-1, x+kx-1], zero outside.
template <typename Real>
void im2col_same(const Real* src, std::size_t batch, std::size_t channels, std::size_t h,
                 std::size_t w, Real* col) {
    const std::size_t hw = h * w;
    const std::size_t cols = batch * hw;
    for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t ky = 0; ky < 3; ++ky) {
            for (std::size_t kx = 0; kx < 3; ++kx) {
                Real* row = col + (c * kTaps + ky * 3 + kx) * cols;
                for (std::size_t b = 0; b < batch; ++b) {
                    const Real* plane = src + (b * channels + c) * hw;
                    Real* dst_plane = row + b * hw;
                    for (std::size_t y = 0; y < h; ++y) {
                        Real* dst = dst_plane + y * w;
                        const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + ky) - 1;
                        if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) {
                            std::fill(dst, dst + w, Real(0));
                            continue;
                        }
                        const Real* s = plane + static_cast<std::size_t>(sy) * w;
                        if (kx == 1) {
                            std::memcpy(dst, s, w * sizeof(Real));
                        } else if (kx == 0) {
                            dst[0] = Real(0);
                            std::memcpy(dst + 1, s, (w - 1) * sizeof(Real));
                        } else {
                            std::memcpy(dst, s + 1, (w - 1) * sizeof(Real));
                            dst[w - 1] = Real(0);
                        }
                    }
                }
            }
        }
    }
}

// Adjoint of im2col_same: accumulates col back into dst.
template <typename Real>
void col2im_same_add(const Real* col, std::size_t batch, std::size_t channels, std::size_t h,
                     std::size_t w, Real* dst) {
    const std::size_t hw = h * w;
    const std::size_t cols = batch * hw;
    for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t ky = 0; ky < 3; ++ky) {
            for (std::size_t kx = 0; kx < 3; ++kx) {
                const Real* row = col + (c * kTaps + ky * 3 + kx) * cols;
                for (std::size_t b = 0; b < batch; ++b) {
                    Real* plane = dst + (b * channels + c) * hw;
                    const Real* src_plane = row + b * hw;
                    for (std::size_t y = 0; y < h; ++y) {
                        const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + ky) - 1;
                        if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) continue;
                        const Real* s = src_plane + y * w;
                        Real* d = plane + static_cast<std::size_t>(sy) * w;
                        if (kx == 1) {
                            for (std::size_t x = 0; x < w; ++x) d[x] += s[x];
                        } else if (kx == 0) {
                            for (std::size_t x = 1; x < w; ++x) d[x - 1] += s[x];
                        } else {
                            for (std::size_t x = 0; x + 1 < w; ++x) d[x + 1] += s[x];
                        }
                    }
                }
            }
        }
    }
}

// Stride-2 transposed-conv scatter: input (iy, ix) through tap (ky, kx) lands on
// (2 iy + ky - 1, 2 ix + kx - 1) of an (2h x 2w) output.
template <typename Real>
void col2im_up2_add(const Real* col, std::size_t batch, std::size_t channels, std::size_t h,
                    std::size_t w, Real* dst) {
    const std::size_t hw = h * w;
    const std::size_t cols = batch * hw;
    const std::size_t oh = 2 * h;
    const std::size_t ow = 2 * w;
    for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t ky = 0; ky < 3; ++ky) {
            for (std::size_t kx = 0; kx < 3; ++kx) {
                const Real* row = col + (c * kTaps + ky * 3 + kx) * cols;
                const std::size_t x_begin = kx == 0 ? 1 : 0;
                for (std::size_t b = 0; b < batch; ++b) {
                    Real* plane = dst + (b * channels + c) * oh * ow;
                    for (std::size_t iy = 0; iy < h; ++iy) {
                        const std::ptrdiff_t oy = static_cast<std::ptrdiff_t>(2 * iy + ky) - 1;
                        if (oy < 0) continue;
                        const Real* s = row + b * hw + iy * w;
                        Real* d = plane + static_cast<std::size_t>(oy) * ow;
                        for (std::size_t ix = x_begin; ix < w; ++ix) d[2 * ix + kx - 1] += s[ix];
                    }
                }
            }
        }
    }
}

// Adjoint of col2im_up2_add: gathers output-grid values into column form.
template <typename Real>
void im2col_up2(const Real* src, std::size_t batch, std::size_t channels, std::size_t h,
                std::size_t w, Real* col) {
    const std::size_t hw = h * w;
    const std::size_t cols = batch * hw;
    const std::size_t oh = 2 * h;
    const std::size_t ow = 2 * w;
    for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t ky = 0; ky < 3; ++ky) {
            for (std::size_t kx = 0; kx < 3; ++kx) {
                Real* row = col + (c * kTaps + ky * 3 + kx) * cols;
                for (std::size_t b = 0; b < batch; ++b) {
                    const Real* plane = src + (b * channels + c) * oh * ow;
                    for (std::size_t iy = 0; iy < h; ++iy) {
                        Real* d = row + b * hw + iy * w;
                        const std::ptrdiff_t oy = static_cast<std::ptrdiff_t>(2 * iy + ky) - 1;
                        if (oy < 0) {
                            std::fill(d, d + w, Real(0));
                            continue;
                        }
                        const Real* s = plane + static_cast<std::size_t>(oy) * ow;
                        std::size_t ix = 0;
                        if (kx == 0) d[ix++] = Real(0);
                        for (; ix < w; ++ix) d[ix] = s[2 * ix + kx - 1];
                    }
                }
            }
        }
    }
}

template <typename Real>
void add_bias(Real* out, std::size_t batch, std::size_t channels, std::size_t plane,
              const Real* bias) {
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t c = 0; c < channels; ++c) {
            Real* p = out + (b * channels + c) * plane;
            const Real v = bias[c];
            for (std::size_t i = 0; i < plane; ++i) p[i] += v;
        }
    }
}

template <typename Real>
void accumulate_bias_grad(const Real* grad_out, std::size_t batch, std::size_t channels,
                          std::size_t plane, Real* grad_bias) {
    for (std::size_t c = 0; c < channels; ++c) {
        double acc = 0.0;
        for (std::size_t b = 0; b < batch; ++b) {
            const Real* p = grad_out + (b * channels + c) * plane;
            for (std::size_t i = 0; i < plane; ++i) acc += p[i];
        }
        grad_bias[c] += static_cast<Real>(acc);
    }
}

int as_int(std::size_t v) { return static_cast<int>(v); }

}  // namespace

template <typename Real>
Tensor<Real> conv2d(Tape<Real>& tape, const Tensor<Real>& x, const Tensor<Real>& w,
                    const Tensor<Real>& b) {
    require_rank4(x, "conv2d", "input");
    require_rank4(w, "conv2d", "weight");
    require(w.dim(2) == 3 && w.dim(3) == 3,
            "conv2d: kernel must be 3x3, got " + shape_str(w.shape()));
    require(w.dim(1) == x.dim(1), "conv2d: weight expects " + std::to_string(w.dim(1)) +
                                      " input channels, input has " + std::to_string(x.dim(1)));
    require(b.defined() && b.rank() == 1 && b.dim(0) == w.dim(0),
            "conv2d: bias must have " + std::to_string(w.dim(0)) + " entries");

    const std::size_t batch = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
    const std::size_t cout = w.dim(0);
    const std::size_t hw = h * wd, k = cin * kTaps;

    auto out = Tensor<Real>::zeros({batch, cout, h, wd}, tape.wants({&x, &w, &b}));
    // One image at a time keeps the column matrix cache-sized.
    Real* col = scratch<Real>(0, k * hw);
    for (std::size_t n = 0; n < batch; ++n) {
        im2col_same(x.data().data() + n * cin * hw, 1, cin, h, wd, col);
        detail::gemm(false, false, as_int(cout), as_int(hw), as_int(k), Real(1), w.data().data(),
                     as_int(k), col, as_int(hw), Real(0), out.data().data() + n * cout * hw,
                     as_int(hw));
    }
    add_bias(out.data().data(), batch, cout, hw, b.data().data());
    check_finite(out, "conv2d");

    if (out.requires_grad()) {
        tape.record({x, w, b}, out, [x, w, b, out]() mutable {
            const std::size_t batch = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
            const std::size_t cout = w.dim(0);
            const std::size_t hw = h * wd, k = cin * kTaps;
            const Real* gout = out.grad().data();
            if (b.requires_grad()) {
                accumulate_bias_grad(gout, batch, cout, hw, b.ensure_grad().data());
            }
            Real* col = scratch<Real>(0, k * hw);
            for (std::size_t n = 0; n < batch; ++n) {
                const Real* g = gout + n * cout * hw;
                if (w.requires_grad()) {
                    im2col_same(x.data().data() + n * cin * hw, 1, cin, h, wd, col);
                    detail::gemm(false, true, as_int(cout), as_int(k), as_int(hw), Real(1), g,
                                 as_int(hw), col, as_int(hw), Real(1), w.ensure_grad().data(),
                                 as_int(k));
                }
                if (x.requires_grad()) {
                    detail::gemm(true, false, as_int(k), as_int(hw), as_int(cout), Real(1),
                                 w.data().data(), as_int(k), g, as_int(hw), Real(0), col,
                                 as_int(hw));
                    col2im_same_add(col, 1, cin, h, wd, x.ensure_grad().data() + n * cin * hw);
                }
            }
        });
    }
    return out;
}

template <typename Real>
Tensor<Real> prelu(Tape<Real>& tape, const Tensor<Real>& x, const Tensor<Real>& alpha) {
    require(x.defined() && x.rank() >= 2, "prelu: input needs a channel axis");
    require(alpha.defined() && alpha.rank() == 1 && alpha.dim(0) == x.dim(1),
            "prelu: " + std::to_string(alpha.defined() ? alpha.numel() : 0) +
                " slopes for " + std::to_string(x.dim(1)) + " channels");
    const std::size_t batch = x.dim(0), channels = x.dim(1);
    const std::size_t plane = x.numel() / (batch * channels);

    auto out = Tensor<Real>::zeros(x.shape(), tape.wants({&x, &alpha}));
    const Real* src = x.data().data();
    Real* dst = out.data().data();
    for (std::size_t bc = 0; bc < batch * channels; ++bc) {
        const Real a = alpha.data()[bc % channels];
        const Real* s = src + bc * plane;
        Real* d = dst + bc * plane;
        for (std::size_t i = 0; i < plane; ++i) d[i] = s[i] >= Real(0) ? s[i] : a * s[i];
    }
    check_finite(out, "prelu");

    if (out.requires_grad()) {
        tape.record({x, alpha}, out, [x, alpha, out, batch, channels, plane]() mutable {
            const Real* gout = out.grad().data();
            const Real* src = x.data().data();
            Real* gx = x.requires_grad() ? x.ensure_grad().data() : nullptr;
            Real* ga = alpha.requires_grad() ? alpha.ensure_grad().data() : nullptr;
            for (std::size_t bc = 0; bc < batch * channels; ++bc) {
                const std::size_t c = bc % channels;
                const Real a = alpha.data()[c];
                const Real* s = src + bc * plane;
                const Real* g = gout + bc * plane;
                if (gx) {
                    Real* d = gx + bc * plane;
                    for (std::size_t i = 0; i < plane; ++i) d[i] += s[i] >= Real(0) ? g[i] : a * g[i];
                }
                if (ga) {
                    double acc = 0.0;
                    for (std::size_t i = 0; i < plane; ++i) {
                        if (s[i] < Real(0)) acc += static_cast<double>(g[i]) * s[i];
                    }
                    ga[c] += static_cast<Real>(acc);
                }
            }
        });
    }
    return out;
}

template <typename Real>
Tensor<Real> maxpool2(Tape<Real>& tape, const Tensor<Real>& x) {
    require_rank4(x, "maxpool2", "input");
    const std::size_t batch = x.dim(0), channels = x.dim(1), h = x.dim(2), w = x.dim(3);
    require(h % 2 == 0 && w % 2 == 0,
            "maxpool2: spatial dims must be even, got " + shape_str(x.shape()));
    const std::size_t oh = h / 2, ow = w / 2;

    auto out = Tensor<Real>::zeros({batch, channels, oh, ow}, tape.wants({&x}));
    const bool track = out.requires_grad();
    auto argmax = std::make_shared<std::vector<std::uint32_t>>(track ? out.numel() : 0);

    const Real* src = x.data().data();
    Real* dst = out.data().data();
    for (std::size_t bc = 0; bc < batch * channels; ++bc) {
        const Real* plane = src + bc * h * w;
        for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox) {
                const std::size_t base = 2 * oy * w + 2 * ox;
                const std::size_t cand[4] = {base, base + 1, base + w, base + w + 1};
                std::size_t best = cand[0];
                for (std::size_t i = 1; i < 4; ++i) {
                    if (plane[cand[i]] > plane[best]) best = cand[i];
                }
                const std::size_t o = bc * oh * ow + oy * ow + ox;
                dst[o] = plane[best];
                if (track) (*argmax)[o] = static_cast<std::uint32_t>(best);
            }
        }
    }

    if (track) {
        tape.record({x}, out, [x, out, argmax, h, w, oh, ow]() mutable {
            const Real* gout = out.grad().data();
            Real* gx = x.ensure_grad().data();
            const std::size_t planes = out.numel() / (oh * ow);
            for (std::size_t bc = 0; bc < planes; ++bc) {
                for (std::size_t i = 0; i < oh * ow; ++i) {
                    const std::size_t o = bc * oh * ow + i;
                    gx[bc * h * w + (*argmax)[o]] += gout[o];
                }
            }
        });
    }
    return out;
}

template <typename Real>
Tensor<Real> deconv2d(Tape<Real>& tape, const Tensor<Real>& x, const Tensor<Real>& w,
                      const Tensor<Real>& b) {
    require_rank4(x, "deconv2d", "input");
    require_rank4(w, "deconv2d", "weight");
    require(w.dim(2) == 3 && w.dim(3) == 3,
            "deconv2d: kernel must be 3x3, got " + shape_str(w.shape()));
    require(w.dim(0) == x.dim(1), "deconv2d: weight expects " + std::to_string(w.dim(0)) +
                                      " input channels, input has " + std::to_string(x.dim(1)));
    require(b.defined() && b.rank() == 1 && b.dim(0) == w.dim(1),
            "deconv2d: bias must have " + std::to_string(w.dim(1)) + " entries");

    const std::size_t batch = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
    const std::size_t cout = w.dim(1);
    const std::size_t hw = h * wd, k = cout * kTaps;

    auto out = Tensor<Real>::zeros({batch, cout, 2 * h, 2 * wd}, tape.wants({&x, &w, &b}));
    Real* col = scratch<Real>(0, k * hw);
    for (std::size_t n = 0; n < batch; ++n) {
        detail::gemm(true, false, as_int(k), as_int(hw), as_int(cin), Real(1), w.data().data(),
                     as_int(k), x.data().data() + n * cin * hw, as_int(hw), Real(0), col,
                     as_int(hw));
        col2im_up2_add(col, 1, cout, h, wd, out.data().data() + n * cout * 4 * hw);
    }
    add_bias(out.data().data(), batch, cout, 4 * hw, b.data().data());
    check_finite(out, "deconv2d");

    if (out.requires_grad()) {
        tape.record({x, w, b}, out, [x, w, b, out]() mutable {
            const std::size_t batch = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
            const std::size_t cout = w.dim(1);
            const std::size_t hw = h * wd, k = cout * kTaps;
            const Real* gout = out.grad().data();
            if (b.requires_grad()) {
                accumulate_bias_grad(gout, batch, cout, 4 * hw, b.ensure_grad().data());
            }
            if (!w.requires_grad() && !x.requires_grad()) return;
            Real* gcol = scratch<Real>(0, k * hw);
            for (std::size_t n = 0; n < batch; ++n) {
                im2col_up2(gout + n * cout * 4 * hw, 1, cout, h, wd, gcol);
                if (w.requires_grad()) {
                    detail::gemm(false, true, as_int(cin), as_int(k), as_int(hw), Real(1),
                                 x.data().data() + n * cin * hw, as_int(hw), gcol, as_int(hw),
                                 Real(1), w.ensure_grad().data(), as_int(k));
                }
                if (x.requires_grad()) {
                    detail::gemm(false, false, as_int(cin), as_int(hw), as_int(k), Real(1),
                                 w.data().data(), as_int(k), gcol, as_int(hw), Real(1),
                                 x.ensure_grad().data() + n * cin * hw, as_int(hw));
                }
            }
        });
    }
    return out;
}

template <typename Real>
Tensor<Real> concat_channels(Tape<Real>& tape, const Tensor<Real>& a, const Tensor<Real>& b) {
    require_rank4(a, "concat_channels", "first operand");
    require_rank4(b, "concat_channels", "second operand");
    require(a.dim(0) == b.dim(0) && a.dim(2) == b.dim(2) && a.dim(3) == b.dim(3),
            "concat_channels: " + shape_str(a.shape()) + " and " + shape_str(b.shape()) +
                " differ outside the channel axis");
    const std::size_t batch = a.dim(0), ca = a.dim(1), cb = b.dim(1);
    const std::size_t plane = a.dim(2) * a.dim(3);

    auto out = Tensor<Real>::zeros({batch, ca + cb, a.dim(2), a.dim(3)}, tape.wants({&a, &b}));
    for (std::size_t n = 0; n < batch; ++n) {
        Real* dst = out.data().data() + n * (ca + cb) * plane;
        std::memcpy(dst, a.data().data() + n * ca * plane, ca * plane * sizeof(Real));
        std::memcpy(dst + ca * plane, b.data().data() + n * cb * plane, cb * plane * sizeof(Real));
    }

    if (out.requires_grad()) {
        tape.record({a, b}, out, [a, b, out, batch, ca, cb, plane]() mutable {
            const Real* gout = out.grad().data();
            Real* ga = a.requires_grad() ? a.ensure_grad().data() : nullptr;
            Real* gb = b.requires_grad() ? b.ensure_grad().data() : nullptr;
            for (std::size_t n = 0; n < batch; ++n) {
                const Real* src = gout + n * (ca + cb) * plane;
                if (ga) {
                    Real* d = ga + n * ca * plane;
                    for (std::size_t i = 0; i < ca * plane; ++i) d[i] += src[i];
                }
                if (gb) {
                    Real* d = gb + n * cb * plane;
                    for (std::size_t i = 0; i < cb * plane; ++i) d[i] += src[ca * plane + i];
                }
            }
        });
    }
    return out;
}

template <typename Real>
Tensor<Real> slice_channels(Tape<Real>& tape, const Tensor<Real>& x, std::size_t begin,
                            std::size_t end) {
    require_rank4(x, "slice_channels", "input");
    require(begin < end && end <= x.dim(1),
            "slice_channels: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                ") outside " + std::to_string(x.dim(1)) + " channels");
    const std::size_t batch = x.dim(0), channels = x.dim(1), count = end - begin;
    const std::size_t plane = x.dim(2) * x.dim(3);

    auto out = Tensor<Real>::zeros({batch, count, x.dim(2), x.dim(3)}, tape.wants({&x}));
    for (std::size_t n = 0; n < batch; ++n) {
        std::memcpy(out.data().data() + n * count * plane,
                    x.data().data() + (n * channels + begin) * plane, count * plane * sizeof(Real));
    }
    if (out.requires_grad()) {
        tape.record({x}, out, [x, out, batch, channels, begin, count, plane]() mutable {
            const Real* gout = out.grad().data();
            Real* gx = x.ensure_grad().data();
            for (std::size_t n = 0; n < batch; ++n) {
                Real* d = gx + (n * channels + begin) * plane;
                const Real* s = gout + n * count * plane;
                for (std::size_t i = 0; i < count * plane; ++i) d[i] += s[i];
            }
        });
    }
    return out;
}

template <typename Real>
Tensor<Real> add(Tape<Real>& tape, const Tensor<Real>& a, const Tensor<Real>& b) {
    require(a.defined() && b.defined() && a.shape() == b.shape(),
            "add: shapes " + (a.defined() ? shape_str(a.shape()) : "undefined") + " and " +
                (b.defined() ? shape_str(b.shape()) : "undefined") + " differ");
    auto out = Tensor<Real>::zeros(a.shape(), tape.wants({&a, &b}));
    const Real* pa = a.data().data();
    const Real* pb = b.data().data();
    Real* po = out.data().data();
    for (std::size_t i = 0; i < out.numel(); ++i) po[i] = pa[i] + pb[i];
    check_finite(out, "add");

    if (out.requires_grad()) {
        tape.record({a, b}, out, [a, b, out]() mutable {
            const Real* g = out.grad().data();
            for (const Tensor<Real>* t : {&a, &b}) {
                if (!t->requires_grad()) continue;
                Real* d = t->ensure_grad().data();
                for (std::size_t i = 0; i < t->numel(); ++i) d[i] += g[i];
            }
        });
    }
    return out;
}

template <typename Real>
Tensor<Real> sum(Tape<Real>& tape, const Tensor<Real>& x) {
    require(x.defined(), "sum: undefined input");
    double acc = 0.0;
    for (Real v : x.data()) acc += v;
    auto out = Tensor<Real>::from({1}, {static_cast<Real>(acc)}, tape.wants({&x}));
    if (out.requires_grad()) {
        tape.record({x}, out, [x, out]() mutable {
            const Real g = out.grad()[0];
            for (Real& d : x.ensure_grad()) d += g;
        });
    }
    return out;
}

template <typename Real>
Tensor<Real> mse_loss(Tape<Real>& tape, const Tensor<Real>& pred, const Tensor<Real>& gt) {
    require(pred.defined() && gt.defined() && pred.shape() == gt.shape(),
            "mse_loss: prediction " + (pred.defined() ? shape_str(pred.shape()) : "undefined") +
                " vs ground truth " + (gt.defined() ? shape_str(gt.shape()) : "undefined"));
    require(pred.numel() > 0, "mse_loss: empty tensors");
    const Real* p = pred.data().data();
    const Real* g = gt.data().data();
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.numel(); ++i) {
        const double d = static_cast<double>(p[i]) - static_cast<double>(g[i]);
        acc += d * d;
    }
    const double n = static_cast<double>(pred.numel());
    auto out = Tensor<Real>::from({1}, {static_cast<Real>(acc / n)}, tape.wants({&pred}));
    if (out.requires_grad()) {
        tape.record({pred, gt}, out, [pred, gt, out, n]() mutable {
            const Real scale = static_cast<Real>(2.0 / n) * out.grad()[0];
            const Real* p = pred.data().data();
            const Real* g = gt.data().data();
            Real* d = pred.ensure_grad().data();
            for (std::size_t i = 0; i < pred.numel(); ++i) d[i] += scale * (p[i] - g[i]);
        });
    }
    return out;
}

#define JCNP_INSTANTIATE_OPS(Real)                                                              \
    template Tensor<Real> conv2d(Tape<Real>&, const Tensor<Real>&, const Tensor<Real>&,         \
                                 const Tensor<Real>&);                                          \
    template Tensor<Real> prelu(Tape<Real>&, const Tensor<Real>&, const Tensor<Real>&);         \
    template Tensor<Real> maxpool2(Tape<Real>&, const Tensor<Real>&);                           \
    template Tensor<Real> deconv2d(Tape<Real>&, const Tensor<Real>&, const Tensor<Real>&,       \
                                   const Tensor<Real>&);                                        \
    template Tensor<Real> concat_channels(Tape<Real>&, const Tensor<Real>&,                     \
                                          const Tensor<Real>&);                                 \
    template Tensor<Real> slice_channels(Tape<Real>&, const Tensor<Real>&, std::size_t,         \
                                         std::size_t);                                          \
    template Tensor<Real> add(Tape<Real>&, const Tensor<Real>&, const Tensor<Real>&);           \
    template Tensor<Real> sum(Tape<Real>&, const Tensor<Real>&);                                \
    template Tensor<Real> mse_loss(Tape<Real>&, const Tensor<Real>&, const Tensor<Real>&);

JCNP_INSTANTIATE_OPS(float)
JCNP_INSTANTIATE_OPS(double)

#undef JCNP_INSTANTIATE_OPS

}  // namespace jcnp
