#include "jcnp/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace jcnp {
namespace {

// Summed-area table with a zero first row/column: (w+1) x (h+1).
class IntegralImage {
public:
    IntegralImage(const std::vector<double>& v, int w, int h)
        : w_(w), table_(static_cast<std::size_t>(w + 1) * (h + 1), 0.0) {
        for (int y = 0; y < h; ++y) {
            double row = 0.0;
            for (int x = 0; x < w; ++x) {
                row += v[static_cast<std::size_t>(y) * w + x];
                at(x + 1, y + 1) = at(x + 1, y) + row;
            }
        }
    }

    // Sum over [x0, x1) x [y0, y1).
    double sum(int x0, int y0, int x1, int y1) const {
        return at(x1, y1) - at(x0, y1) - at(x1, y0) + at(x0, y0);
    }

private:
    double& at(int x, int y) { return table_[static_cast<std::size_t>(y) * (w_ + 1) + x]; }
    double at(int x, int y) const { return table_[static_cast<std::size_t>(y) * (w_ + 1) + x]; }

    int w_;
    std::vector<double> table_;
};

std::vector<double> box_mean(const std::vector<double>& v, int w, int h, int r) {
    const IntegralImage ii(v, w, h);
    std::vector<double> out(v.size());
    for (int y = 0; y < h; ++y) {
        const int y0 = std::max(0, y - r), y1 = std::min(h, y + r + 1);
        for (int x = 0; x < w; ++x) {
            const int x0 = std::max(0, x - r), x1 = std::min(w, x + r + 1);
            out[static_cast<std::size_t>(y) * w + x] =
                ii.sum(x0, y0, x1, y1) / static_cast<double>((x1 - x0) * (y1 - y0));
        }
    }
    return out;
}

void require_single_channel(const Image& img, const char* what) {
    if (img.channels != 1) throw std::invalid_argument(std::string(what) + " must be single-channel");
}

}  // namespace

std::vector<double> guided_filter_raw(const Image& target, const Image& guidance,
                                      const GuidedFilterParams& params) {
    require_single_channel(target, "guided filter target");
    require_single_channel(guidance, "guided filter guidance");
    if (!target.same_size(guidance)) {
        throw std::invalid_argument("guided filter: target and guidance sizes differ");
    }
    if (params.radius < 1 || !(params.eps > 0.0)) {
        throw std::invalid_argument("guided filter: radius >= 1 and eps > 0 required");
    }
    const int w = target.width, h = target.height, r = params.radius;
    const auto& I = guidance.values;
    const auto& p = target.values;
    std::vector<double> Ip(p.size()), II(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        Ip[i] = I[i] * p[i];
        II[i] = I[i] * I[i];
    }
    const auto mean_I = box_mean(I, w, h, r);
    const auto mean_p = box_mean(p, w, h, r);
    const auto mean_Ip = box_mean(Ip, w, h, r);
    const auto mean_II = box_mean(II, w, h, r);

    std::vector<double> a(p.size()), b(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double cov = mean_Ip[i] - mean_I[i] * mean_p[i];
        const double var = mean_II[i] - mean_I[i] * mean_I[i];
        a[i] = cov / (var + params.eps);
        b[i] = mean_p[i] - a[i] * mean_I[i];
    }
    const auto mean_a = box_mean(a, w, h, r);
    const auto mean_b = box_mean(b, w, h, r);
    std::vector<double> q(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) q[i] = mean_a[i] * I[i] + mean_b[i];
    return q;
}

Image guided_filter(const Image& target, const Image& guidance, const GuidedFilterParams& params,
                    std::size_t* clamped) {
    auto q = guided_filter_raw(target, guidance, params);
    Image out = Image::zeros(target.width, target.height);
    std::size_t n = 0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        const double c = std::clamp(q[i], 0.0, 1.0);
        if (c != q[i]) ++n;
        out.values[i] = c;
    }
    if (clamped) *clamped = n;
    return out;
}

Image joint_bilateral_upsample(const Image& lr_target, const Image& guidance, int factor,
                               const JbuParams& params) {
    require_single_channel(lr_target, "JBU target");
    require_single_channel(guidance, "JBU guidance");
    if (factor < 1 || guidance.width != lr_target.width * factor ||
        guidance.height != lr_target.height * factor) {
        throw std::invalid_argument("JBU: guidance must be exactly factor x the LR target size");
    }
    if (!(params.sigma_spatial > 0.0) || !(params.sigma_range > 0.0) || params.radius < 1) {
        throw std::invalid_argument("JBU: sigmas and radius must be positive");
    }
    const double inv_s = 1.0 / (2.0 * params.sigma_spatial * params.sigma_spatial);
    const double inv_r = 1.0 / (2.0 * params.sigma_range * params.sigma_range);
    const int r = params.radius;
    const int lw = lr_target.width, lh = lr_target.height;

    // Spatial weights depend only on the HR offset; tabulate per axis.
    std::vector<double> spatial(static_cast<std::size_t>(2 * r + 1));
    for (int d = -r; d <= r; ++d) spatial[static_cast<std::size_t>(d + r)] = std::exp(-d * d * inv_s);

    Image out = Image::zeros(guidance.width, guidance.height);
    for (int py = 0; py < guidance.height; ++py) {
        // LR rows with |qy * factor - py| <= r.
        const int qy0 = std::max(0, (py - r + factor - 1) / factor);
        const int qy1 = std::min(lh - 1, (py + r) / factor);
        for (int px = 0; px < guidance.width; ++px) {
            const int qx0 = std::max(0, (px - r + factor - 1) / factor);
            const int qx1 = std::min(lw - 1, (px + r) / factor);
            const double gp = guidance.at(px, py);
            double num = 0.0, den = 0.0;
            for (int qy = qy0; qy <= qy1; ++qy) {
                const double wy = spatial[static_cast<std::size_t>(qy * factor - py + r)];
                for (int qx = qx0; qx <= qx1; ++qx) {
                    const double wx = spatial[static_cast<std::size_t>(qx * factor - px + r)];
                    const double dg = gp - guidance.at(qx * factor, qy * factor);
                    const double wgt = wy * wx * std::exp(-dg * dg * inv_r);
                    num += wgt * lr_target.at(qx, qy);
                    den += wgt;
                }
            }
            out.at(px, py) = den > 0.0 ? num / den
                                       : lr_target.at(std::min(px / factor, lw - 1), std::min(py / factor, lh - 1));
        }
    }
    return out;
}

Image bicubic_sr(const Image& lr_target, int factor) { return upsample_bicubic(lr_target, factor); }

}  // namespace jcnp
