#include "jcnp/image.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

namespace jcnp {

Image Image::zeros(int width, int height, int channels) {
    return filled(width, height, 0.0, channels);
}

Image Image::filled(int width, int height, double value, int channels) {
    if (width < 1 || height < 1 || (channels != 1 && channels != 3)) {
        throw std::invalid_argument("image must be at least 1x1 with 1 or 3 channels");
    }
    Image img;
    img.width = width;
    img.height = height;
    img.channels = channels;
    img.values.assign(static_cast<std::size_t>(width) * height * channels, value);
    return img;
}

namespace {

class PnmReader {
public:
    PnmReader(std::string bytes, std::string path) : bytes_(std::move(bytes)), path_(std::move(path)) {}

    long header_int(const char* what) {
        skip_space_and_comments();
        if (pos_ >= bytes_.size() || !std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
            fail(std::string("expected ") + what);
        }
        long v = 0;
        while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
            v = v * 10 + (bytes_[pos_++] - '0');
            if (v > 1'000'000'000L) fail(std::string(what) + " out of range");
        }
        return v;
    }

    std::string magic() {
        if (bytes_.size() < 2 || bytes_[0] != 'P') fail("missing PNM magic");
        pos_ = 2;
        return bytes_.substr(0, 2);
    }

    // Exactly one whitespace byte separates maxval from raster data.
    void end_of_header() {
        if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
            fail("missing whitespace after maxval");
        }
        ++pos_;
    }

    unsigned binary_sample(bool wide) {
        const std::size_t need = wide ? 2 : 1;
        if (pos_ + need > bytes_.size()) fail("raster data truncated");
        unsigned v = static_cast<unsigned char>(bytes_[pos_]);
        if (wide) v = (v << 8) | static_cast<unsigned char>(bytes_[pos_ + 1]);
        pos_ += need;
        return v;
    }

    unsigned ascii_sample() {
        skip_space_and_comments();
        if (pos_ >= bytes_.size()) fail("raster data truncated");
        return static_cast<unsigned>(header_int("sample"));
    }

    [[noreturn]] void fail(const std::string& why) const {
        throw DataError(path_ + ": malformed PNM (" + why + ")");
    }

private:
    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            const char c = bytes_[pos_];
            if (c == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    std::string bytes_;
    std::string path_;
    std::size_t pos_ = 0;
};

}  // namespace

Image read_image(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(path.string() + ": cannot open image");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    PnmReader reader(std::move(bytes), path.string());
    const std::string magic = reader.magic();
    int channels = 0;
    bool binary = false;
    if (magic == "P2") {
        channels = 1;
    } else if (magic == "P3") {
        channels = 3;
    } else if (magic == "P5") {
        channels = 1;
        binary = true;
    } else if (magic == "P6") {
        channels = 3;
        binary = true;
    } else {
        reader.fail("unsupported magic " + magic);
    }
    const long width = reader.header_int("width");
    const long height = reader.header_int("height");
    const long maxval = reader.header_int("maxval");
    if (width < 1 || height < 1) reader.fail("empty image");
    if (maxval < 1 || maxval > 65535) {
        throw DataError(path.string() + ": unsupported maxval " + std::to_string(maxval));
    }
    if (binary) reader.end_of_header();

    Image img = Image::zeros(static_cast<int>(width), static_cast<int>(height), channels);
    const bool wide = maxval > 255;
    const double scale = 1.0 / static_cast<double>(maxval);
    for (auto& v : img.values) {
        const unsigned s = binary ? reader.binary_sample(wide) : reader.ascii_sample();
        if (s > static_cast<unsigned>(maxval)) reader.fail("sample exceeds maxval");
        v = s * scale;
    }
    return img;
}

void write_image(const Image& image, const std::filesystem::path& path,
                 const PnmWriteOptions& options) {
    if (options.maxval != 255 && options.maxval != 65535) {
        throw std::invalid_argument("maxval must be 255 or 65535");
    }
    const bool rgb = image.channels == 3;
    std::ostringstream out;
    out << (options.binary ? (rgb ? "P6" : "P5") : (rgb ? "P3" : "P2")) << '\n';
    for (const auto& c : options.comments) out << "# " << c << '\n';
    out << image.width << ' ' << image.height << '\n' << options.maxval << '\n';

    const bool wide = options.maxval > 255;
    std::size_t col = 0;
    for (double v : image.values) {
        const auto s = static_cast<unsigned>(std::lround(std::clamp(v, 0.0, 1.0) * options.maxval));
        if (options.binary) {
            if (wide) out.put(static_cast<char>((s >> 8) & 0xff));
            out.put(static_cast<char>(s & 0xff));
        } else {
            out << s << (++col % static_cast<std::size_t>(image.width * image.channels) == 0 ? '\n' : ' ');
        }
    }

    std::ofstream file(path, std::ios::binary);
    if (!file) throw DataError(path.string() + ": cannot open for writing");
    const std::string bytes = out.str();
    file.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!file) throw DataError(path.string() + ": write failed");
}

Image to_luminance(const Image& image) {
    if (image.channels == 1) return image;
    Image out = Image::zeros(image.width, image.height, 1);
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        const double* px = &image.values[i * 3];
        out.values[i] = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
    }
    return out;
}

Image to_rgb(const Image& image) {
    if (image.channels == 3) return image;
    Image out = Image::zeros(image.width, image.height, 3);
    for (std::size_t i = 0; i < image.values.size(); ++i) {
        for (int c = 0; c < 3; ++c) out.values[i * 3 + c] = image.values[i];
    }
    return out;
}

Image downsample_nearest(const Image& image, int factor) {
    if (factor < 1 || image.width % factor != 0 || image.height % factor != 0) {
        throw std::invalid_argument("downsample_nearest: factor " + std::to_string(factor) +
                                    " does not divide " + std::to_string(image.width) + "x" +
                                    std::to_string(image.height));
    }
    Image out = Image::zeros(image.width / factor, image.height / factor, image.channels);
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            for (int c = 0; c < image.channels; ++c) out.at(x, y, c) = image.at(x * factor, y * factor, c);
        }
    }
    return out;
}

double catmull_rom_weight(double t) {
    constexpr double a = -0.5;
    t = std::abs(t);
    if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
    if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
    return 0.0;
}

namespace {

struct Taps {
    std::array<int, 4> index;
    std::array<double, 4> weight;
};

std::vector<Taps> bicubic_taps(int in_size, int out_size, int factor) {
    std::vector<Taps> taps(static_cast<std::size_t>(out_size));
    for (int o = 0; o < out_size; ++o) {
        const double u = (o + 0.5) / factor - 0.5;
        const int base = static_cast<int>(std::floor(u));
        auto& t = taps[static_cast<std::size_t>(o)];
        for (int k = 0; k < 4; ++k) {
            const int src = base - 1 + k;
            t.index[static_cast<std::size_t>(k)] = std::clamp(src, 0, in_size - 1);
            t.weight[static_cast<std::size_t>(k)] = catmull_rom_weight(u - src);
        }
    }
    return taps;
}

}  // namespace

Image upsample_bicubic(const Image& image, int factor) {
    if (factor < 1) throw std::invalid_argument("upsample_bicubic: factor must be >= 1");
    const int ow = image.width * factor, oh = image.height * factor, ch = image.channels;
    const auto xt = bicubic_taps(image.width, ow, factor);
    const auto yt = bicubic_taps(image.height, oh, factor);

    // Horizontal pass: image.height x ow.
    std::vector<double> rows(static_cast<std::size_t>(image.height) * ow * ch);
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < ow; ++x) {
            const auto& t = xt[static_cast<std::size_t>(x)];
            for (int c = 0; c < ch; ++c) {
                double acc = 0.0;
                for (std::size_t k = 0; k < 4; ++k) acc += t.weight[k] * image.at(t.index[k], y, c);
                rows[(static_cast<std::size_t>(y) * ow + x) * ch + c] = acc;
            }
        }
    }
    Image out = Image::zeros(ow, oh, ch);
    for (int y = 0; y < oh; ++y) {
        const auto& t = yt[static_cast<std::size_t>(y)];
        for (int x = 0; x < ow; ++x) {
            for (int c = 0; c < ch; ++c) {
                double acc = 0.0;
                for (std::size_t k = 0; k < 4; ++k) {
                    acc += t.weight[k] * rows[(static_cast<std::size_t>(t.index[k]) * ow + x) * ch + c];
                }
                out.at(x, y, c) = std::clamp(acc, 0.0, 1.0);
            }
        }
    }
    return out;
}

}  // namespace jcnp
