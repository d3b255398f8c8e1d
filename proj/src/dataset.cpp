#include "jcnp/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

namespace jcnp {

Image make_lr_target(const Image& gt, int factor) {
    return upsample_bicubic(downsample_nearest(gt, factor), factor);
}

Augmentation Augmentation::inverse() const {
    // (R^k M)^-1 = M R^-k = R^k M, so mirrored transforms are involutions.
    if (mirror) return *this;
    return {(4 - quarter_turns % 4) % 4, false};
}

namespace {

Image mirror_horizontal(const Image& img) {
    Image out = Image::zeros(img.width, img.height, img.channels);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c) out.at(x, y, c) = img.at(img.width - 1 - x, y, c);
    return out;
}

// Counter-clockwise quarter turn.
Image rotate90(const Image& img) {
    Image out = Image::zeros(img.height, img.width, img.channels);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x)
            for (int c = 0; c < img.channels; ++c) out.at(x, y, c) = img.at(img.width - 1 - y, x, c);
    return out;
}

Augmentation draw_augmentation(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> turns(0, 3);
    std::bernoulli_distribution mirror(0.5);
    Augmentation aug;
    aug.quarter_turns = turns(rng);
    aug.mirror = mirror(rng);
    return aug;
}

PatchTriple make_triple(const SamplePair& pair, int x, int y, int size, const Augmentation& aug) {
    PatchTriple t;
    t.guidance = apply_augmentation(crop(pair.guidance, x, y, size, size), aug);
    t.gt = apply_augmentation(crop(pair.gt_target, x, y, size, size), aug);
    t.lr_target = make_lr_target(t.gt, pair.factor);
    return t;
}

void check_patch(const SamplePair& pair, int patch_size) {
    if (!pair.guidance.same_size(pair.gt_target)) {
        throw std::invalid_argument("guidance and target sizes differ");
    }
    if (patch_size < 1 || patch_size > pair.gt_target.width || patch_size > pair.gt_target.height) {
        throw std::invalid_argument("patch size " + std::to_string(patch_size) +
                                    " exceeds image " + std::to_string(pair.gt_target.width) + "x" +
                                    std::to_string(pair.gt_target.height));
    }
    if (patch_size % pair.factor != 0) {
        throw std::invalid_argument("patch size must be a multiple of the scale factor");
    }
}

// Independent stream per (seed, index) so the stream does not depend on how
// many patches a caller consumes.
std::mt19937_64 patch_rng(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    return std::mt19937_64(seq);
}

}  // namespace

Image apply_augmentation(const Image& image, const Augmentation& aug) {
    Image out = aug.mirror ? mirror_horizontal(image) : image;
    for (int k = 0; k < ((aug.quarter_turns % 4) + 4) % 4; ++k) out = rotate90(out);
    return out;
}

Image crop(const Image& image, int x, int y, int width, int height) {
    if (x < 0 || y < 0 || width < 1 || height < 1 || x + width > image.width ||
        y + height > image.height) {
        throw std::invalid_argument("crop window outside image");
    }
    Image out = Image::zeros(width, height, image.channels);
    for (int r = 0; r < height; ++r) {
        const auto* src = &image.values[(static_cast<std::size_t>(y + r) * image.width + x) * image.channels];
        std::copy(src, src + static_cast<std::ptrdiff_t>(width) * image.channels,
                  &out.values[static_cast<std::size_t>(r) * width * image.channels]);
    }
    return out;
}

std::vector<PatchTriple> extract_patches(const SamplePair& pair, int patch_size, int stride,
                                         bool augment, std::uint64_t seed) {
    check_patch(pair, patch_size);
    if (stride < 1) throw std::invalid_argument("stride must be positive");
    std::vector<PatchTriple> out;
    std::uint64_t index = 0;
    for (int y = 0; y + patch_size <= pair.gt_target.height; y += stride) {
        for (int x = 0; x + patch_size <= pair.gt_target.width; x += stride) {
            Augmentation aug;
            if (augment) {
                auto rng = patch_rng(seed, index);
                aug = draw_augmentation(rng);
            }
            out.push_back(make_triple(pair, x, y, patch_size, aug));
            ++index;
        }
    }
    return out;
}

std::vector<PatchTriple> sample_patches(const SamplePair& pair, int patch_size, int count,
                                        bool augment, std::uint64_t seed) {
    check_patch(pair, patch_size);
    std::vector<PatchTriple> out;
    out.reserve(static_cast<std::size_t>(std::max(count, 0)));
    for (int i = 0; i < count; ++i) {
        auto rng = patch_rng(seed, static_cast<std::uint64_t>(i));
        std::uniform_int_distribution<int> px(0, pair.gt_target.width - patch_size);
        std::uniform_int_distribution<int> py(0, pair.gt_target.height - patch_size);
        const int x = px(rng);
        const int y = py(rng);
        const Augmentation aug = augment ? draw_augmentation(rng) : Augmentation{};
        out.push_back(make_triple(pair, x, y, patch_size, aug));
    }
    return out;
}

namespace {

constexpr int kDepthLevels = 6;
constexpr double kTextureAmplitude = 0.03;
constexpr double kNoiseSigma = 0.004;

struct Shape2d {
    bool ellipse;
    double cx, cy, rx, ry;
    int level;

    bool contains(double x, double y) const {
        const double dx = (x - cx) / rx, dy = (y - cy) / ry;
        return ellipse ? dx * dx + dy * dy <= 1.0 : std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0;
    }
};

struct Texture {
    double fx, fy, phase;
};

double level_value(int level) { return 0.1 + 0.8 * level / (kDepthLevels - 1); }

}  // namespace

SamplePair synth_scene(std::uint64_t seed, int size, int factor) {
    if (size < 16 || size % 16 != 0) {
        throw std::invalid_argument("synthetic scene size must be a positive multiple of 16");
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<int> labels(static_cast<std::size_t>(size) * size);
    // Redraw until at least four depth levels are visible.
    for (;;) {
        std::uniform_int_distribution<int> level_dist(0, kDepthLevels - 1);
        std::uniform_int_distribution<int> count_dist(6, 10);
        const int background = level_dist(rng);
        std::vector<Shape2d> shapes(static_cast<std::size_t>(count_dist(rng)));
        for (auto& s : shapes) {
            s.ellipse = unit(rng) < 0.5;
            s.cx = unit(rng) * size;
            s.cy = unit(rng) * size;
            s.rx = size * (0.1 + 0.23 * unit(rng));
            s.ry = size * (0.1 + 0.23 * unit(rng));
            s.level = level_dist(rng);
        }
        std::set<int> seen;
        for (int y = 0; y < size; ++y) {
            for (int x = 0; x < size; ++x) {
                int level = background;
                for (const auto& s : shapes) {
                    if (s.contains(x + 0.5, y + 0.5)) level = s.level;
                }
                labels[static_cast<std::size_t>(y) * size + x] = level;
                seen.insert(level);
            }
        }
        if (seen.size() >= 4) break;
    }

    std::vector<int> shade(kDepthLevels);
    for (int i = 0; i < kDepthLevels; ++i) shade[static_cast<std::size_t>(i)] = i;
    std::shuffle(shade.begin(), shade.end(), rng);

    std::vector<Texture> textures(kDepthLevels);
    for (auto& t : textures) {
        const double period = 10.0 + 14.0 * unit(rng);
        const double angle = std::numbers::pi * unit(rng);
        t.fx = 2.0 * std::numbers::pi * std::cos(angle) / period;
        t.fy = 2.0 * std::numbers::pi * std::sin(angle) / period;
        t.phase = 2.0 * std::numbers::pi * unit(rng);
    }

    std::normal_distribution<double> noise(0.0, kNoiseSigma);
    SamplePair pair;
    pair.factor = factor;
    pair.gt_target = Image::zeros(size, size);
    pair.guidance = Image::zeros(size, size);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            const int level = labels[static_cast<std::size_t>(y) * size + x];
            pair.gt_target.at(x, y) = level_value(level);
            const auto& t = textures[static_cast<std::size_t>(level)];
            const double g = level_value(shade[static_cast<std::size_t>(level)]) +
                             kTextureAmplitude * std::sin(t.fx * x + t.fy * y + t.phase) + noise(rng);
            pair.guidance.at(x, y) = std::clamp(g, 0.0, 1.0);
        }
    }
    return pair;
}

std::vector<bool> edge_mask(const Image& image, double threshold) {
    std::vector<bool> mask(image.pixel_count(), false);
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            const double v = image.at(x, y);
            const bool right = x + 1 < image.width && std::abs(image.at(x + 1, y) - v) > threshold;
            const bool down = y + 1 < image.height && std::abs(image.at(x, y + 1) - v) > threshold;
            mask[static_cast<std::size_t>(y) * image.width + x] = right || down;
        }
    }
    return mask;
}

namespace {

std::string trim(std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\n')) s.pop_back();
    std::size_t start = 0;
    while (start < s.size() && s[start] == ' ') ++start;
    return s.substr(start);
}

}  // namespace

Manifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError(path.string() + ": cannot open manifest");
    Manifest manifest;
    manifest.path = path;
    manifest.dataset = path.stem().string();
    const auto base = path.parent_path();

    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(raw);
        const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
        if (line.empty()) continue;
        if (line.rfind("#!", 0) == 0) {
            std::istringstream directive(line.substr(2));
            std::string key;
            directive >> key;
            if (key == "dataset") {
                directive >> manifest.dataset;
            } else if (key == "range") {
                if (!(directive >> manifest.range_lo >> manifest.range_hi) ||
                    !(manifest.range_hi > manifest.range_lo)) {
                    throw DataError(where + "range needs two numbers lo < hi");
                }
            } else {
                throw DataError(where + "unknown directive '" + key + "'");
            }
            continue;
        }
        if (line[0] == '#') continue;

        std::vector<std::string> fields;
        std::size_t start = 0;
        for (;;) {
            const std::size_t tab = line.find('\t', start);
            fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
            throw DataError(where + "expected 'guidance<TAB>target', found " +
                            std::to_string(fields.size()) + " field(s)");
        }
        ManifestEntry entry;
        auto resolve = [&](const std::string& f) {
            const std::filesystem::path p(f);
            return p.is_absolute() ? p : base / p;
        };
        entry.guidance = resolve(fields[0]);
        entry.target = resolve(fields[1]);
        for (const auto& p : {entry.guidance, entry.target}) {
            if (!std::filesystem::exists(p)) throw DataError(where + "missing file " + p.string());
        }
        manifest.entries.push_back(std::move(entry));
    }
    return manifest;
}

void save_manifest(const Manifest& manifest, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError(path.string() + ": cannot open for writing");
    out << "#! dataset " << manifest.dataset << '\n';
    out << "#! range " << manifest.range_lo << ' ' << manifest.range_hi << '\n';
    const auto base = path.parent_path();
    for (const auto& e : manifest.entries) {
        out << std::filesystem::relative(e.guidance, base).generic_string() << '\t'
            << std::filesystem::relative(e.target, base).generic_string() << '\n';
    }
    if (!out) throw DataError(path.string() + ": write failed");
}

SamplePair load_pair(const ManifestEntry& entry, int factor, int guidance_channels) {
    SamplePair pair;
    pair.factor = factor;
    pair.guidance = read_image(entry.guidance);
    pair.guidance = guidance_channels == 1 ? to_luminance(pair.guidance) : to_rgb(pair.guidance);
    pair.gt_target = to_luminance(read_image(entry.target));
    if (!pair.guidance.same_size(pair.gt_target)) {
        throw DataError(entry.target.string() + ": size differs from guidance " + entry.guidance.string());
    }
    return pair;
}

}  // namespace jcnp
