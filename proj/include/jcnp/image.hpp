#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace jcnp {

/// Raised for unreadable or malformed input files. The message carries the path.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Row-major, channel-interleaved image with values in [0, 1].
struct Image {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<double> values;

    static Image zeros(int width, int height, int channels = 1);
    static Image filled(int width, int height, double value, int channels = 1);

    double& at(int x, int y, int c = 0) {
        return values[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    double at(int x, int y, int c = 0) const {
        return values[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
    bool same_size(const Image& other) const {
        return width == other.width && height == other.height;
    }

    bool operator==(const Image&) const = default;
};

/// Reads P2/P3/P5/P6 with maxval up to 65535 (16-bit samples are big-endian).
Image read_image(const std::filesystem::path& path);

struct PnmWriteOptions {
    int maxval = 255;   // 255 or 65535
    bool binary = true; // P5/P6 vs P2/P3
    std::vector<std::string> comments;
};

/// Samples are round(v * maxval) after clamping to [0, 1]. A file written
/// with default options from a read_image() of a canonical binary 8-bit file
/// reproduces it byte for byte.
void write_image(const Image& image, const std::filesystem::path& path,
                 const PnmWriteOptions& options = {});

/// Rec.601 luma 0.299 R + 0.587 G + 0.114 B. Single-channel input is returned as is.
Image to_luminance(const Image& image);

/// Replicates a single channel into three.
Image to_rgb(const Image& image);

/// out(x, y) = in(x * factor, y * factor): the top-left sample of each block.
Image downsample_nearest(const Image& image, int factor);

/**
 * Catmull-Rom bicubic upsampling (Keys kernel with a = -0.5).
 *
 * Output pixel x samples the input at u = (x + 0.5) / factor - 0.5; the four
 * taps floor(u) - 1 .. floor(u) + 2 are clamped to the image border and
 * weighted by W(u - tap) with
 *   W(t) = 1.5|t|^3 - 2.5|t|^2 + 1               for |t| <= 1
 *   W(t) = -0.5|t|^3 + 2.5|t|^2 - 4|t| + 2       for 1 < |t| < 2.
 * Rows are filtered first, then columns; results are clamped to [0, 1].
 */
Image upsample_bicubic(const Image& image, int factor);

double catmull_rom_weight(double t);

}  // namespace jcnp
