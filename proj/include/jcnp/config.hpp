#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "jcnp/optimizer.hpp"

namespace jcnp {

/// Malformed or out-of-range configuration. Messages carry "source:line:" when known.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * Training and model settings. Defaults are the desk-scale run; full()
 * returns the full-scale preset (200k steps, batch 36, 128 x 128 patches).
 * Keys in config files and command-line flags use the field names.
 */
struct RunConfig {
    int levels = 2;
    int factor = 4;
    int steps = 20000;
    int batch_size = 8;
    int patch_size = 64;
    double base_lr = 1e-3;
    double decay_factor = 0.8;
    std::int64_t decay_interval = 10000;
    std::uint64_t seed = 42;
    OptimizerKind optimizer = OptimizerKind::Adam;
    int guidance_channels = 1;
    /// Random crops drawn from each training pair.
    int patches_per_pair = 10;
    /// Random rotation/mirror of each crop.
    bool augment = true;

    static RunConfig full();

    /// Throws ConfigError naming the first offending key.
    void validate() const;
    /// Sets one key from its text form; throws ConfigError for unknown keys or bad values.
    void set(const std::string& key, const std::string& value);
    /// "key=value" lines in a fixed order; parse_config_text() of them reproduces *this.
    std::vector<std::string> to_lines() const;

    LearningRateSchedule schedule() const { return {base_lr, decay_factor, decay_interval}; }

    bool operator==(const RunConfig&) const = default;
};

std::vector<std::string> config_keys();

/// key=value lines; '#' starts a comment; blank lines ignored; keys may not repeat.
RunConfig parse_config_text(const std::string& text, const std::string& source = "<config>");
RunConfig parse_config(const std::filesystem::path& path);

}  // namespace jcnp
