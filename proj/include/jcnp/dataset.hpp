#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "jcnp/image.hpp"

namespace jcnp {

/// High-resolution guidance and ground-truth target over the same grid.
struct SamplePair {
    Image guidance;
    Image gt_target;
    int factor = 4;
};

/// P x P crops of guidance, network-input target (nearest-down then bicubic-up
/// of the gt crop) and gt, all at the same coordinates.
struct PatchTriple {
    Image guidance;
    Image lr_target;
    Image gt;
};

/// Network-input target for a ground truth: bicubic(nearest_down(gt)).
Image make_lr_target(const Image& gt, int factor);

/// Dihedral transform: `quarter_turns` counter-clockwise rotations applied
/// after an optional horizontal mirror.
struct Augmentation {
    int quarter_turns = 0;
    bool mirror = false;

    Augmentation inverse() const;
    bool operator==(const Augmentation&) const = default;
};

Image apply_augmentation(const Image& image, const Augmentation& aug);
Image crop(const Image& image, int x, int y, int width, int height);

/// Grid crops at (i * stride, j * stride) that fit inside the pair. With
/// `augment`, each crop gets a random dihedral transform drawn from
/// (seed, crop index), applied identically to all three images; the LR target
/// is computed from the transformed gt crop.
std::vector<PatchTriple> extract_patches(const SamplePair& pair, int patch_size, int stride,
                                         bool augment, std::uint64_t seed);

/// `count` crops at uniformly random positions (the random "clip"
/// augmentation), otherwise as extract_patches.
std::vector<PatchTriple> sample_patches(const SamplePair& pair, int patch_size, int count,
                                        bool augment, std::uint64_t seed);

/**
 * Synthetic stand-in for an RGB-D pair. The depth map is piecewise constant:
 * a background plus overlapping rectangles and ellipses, each at one of six
 * depth levels. The guidance intensity of a region is a per-scene shuffled
 * function of its depth level, overlaid with a per-level sinusoidal texture
 * and mild Gaussian noise, so intensity edges coincide with depth edges while
 * textures stay independent of depth. size must be a multiple of 16.
 */
SamplePair synth_scene(std::uint64_t seed, int size, int factor = 4);

/// Pixels whose right or lower neighbour differs by more than `threshold`.
std::vector<bool> edge_mask(const Image& image, double threshold);

struct ManifestEntry {
    std::filesystem::path guidance;
    std::filesystem::path target;
};

/**
 * Pair list: one "guidance<TAB>target" line per pair, '#' comments, blank
 * lines ignored, CRLF tolerated. Relative paths resolve against the manifest
 * directory. Directives:
 *   #! dataset <id>        identifier used in benchmark records
 *   #! range <lo> <hi>     depth range of the dataset on the [0,1] scale,
 *                          mapped onto [0,255] when scoring
 */
struct Manifest {
    std::filesystem::path path;
    std::string dataset;
    double range_lo = 0.0;
    double range_hi = 1.0;
    std::vector<ManifestEntry> entries;
};

Manifest load_manifest(const std::filesystem::path& path);
void save_manifest(const Manifest& manifest, const std::filesystem::path& path);

/// Reads one manifest entry; guidance is reduced/expanded to `guidance_channels`.
SamplePair load_pair(const ManifestEntry& entry, int factor, int guidance_channels);

}  // namespace jcnp
