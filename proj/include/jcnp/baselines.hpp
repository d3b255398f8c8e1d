#pragma once

#include <cstddef>
#include <vector>

#include "jcnp/image.hpp"

namespace jcnp {

struct GuidedFilterParams {
    int radius = 8;
    double eps = 1e-4;  // on [0,1]-scaled intensities

    static GuidedFilterParams defaults_for(int factor) { return {2 * factor, 1e-4}; }
};

/// All three in high-resolution pixels / [0,1] intensity units.
struct JbuParams {
    double sigma_spatial = 2.0;
    double sigma_range = 0.05;
    int radius = 8;

    static JbuParams defaults_for(int factor) {
        return {factor / 2.0, 0.05, 2 * factor};
    }
};

/**
 * Guided filter on single-channel images of equal size. Window statistics are
 * means over the (2r+1)^2 box clipped to the image, computed from
 * summed-area tables:
 *   a = cov(I, p) / (var(I) + eps),  b = mean(p) - a mean(I),
 *   q = mean(a) I + mean(b).
 * guided_filter_raw returns q unclamped; guided_filter clamps to [0, 1] and
 * optionally reports how many pixels were clamped.
 */
std::vector<double> guided_filter_raw(const Image& target, const Image& guidance,
                                      const GuidedFilterParams& params);
Image guided_filter(const Image& target, const Image& guidance, const GuidedFilterParams& params,
                    std::size_t* clamped = nullptr);

/**
 * Joint bilateral upsampling. HR pixel p gathers LR samples q with
 * |q * factor - p| <= radius on both axes and weights
 *   exp(-|p - q * factor|^2 / (2 sigma_s^2)) * exp(-(G(p) - G(q * factor))^2 / (2 sigma_r^2)),
 * i.e. LR sample q sits at HR pixel q * factor (the nearest-neighbour phase).
 * If every weight underflows, p takes the nearest LR sample.
 */
Image joint_bilateral_upsample(const Image& lr_target, const Image& guidance, int factor,
                               const JbuParams& params);

Image bicubic_sr(const Image& lr_target, int factor);

}  // namespace jcnp
