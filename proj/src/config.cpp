#include "jcnp/config.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "jcnp/image.hpp"

namespace jcnp {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    return s.substr(first, s.find_last_not_of(" \t\r") - first + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end || value.empty()) {
        throw ConfigError(key + ": '" + value + "' is not a valid number");
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError(key + ": '" + value + "' is not a boolean (true/false)");
}

}  // namespace

RunConfig RunConfig::full() {
    RunConfig c;
    c.steps = 200000;
    c.batch_size = 36;
    c.patch_size = 128;
    return c;
}

std::vector<std::string> config_keys() {
    return {"levels",         "factor",         "steps", "batch_size", "patch_size",        "base_lr",
            "decay_factor",   "decay_interval", "seed",  "optimizer",  "guidance_channels", "patches_per_pair",
            "augment"};
}

void RunConfig::set(const std::string& key, const std::string& value) {
    if (key == "levels") levels = parse_number<int>(key, value);
    else if (key == "factor") factor = parse_number<int>(key, value);
    else if (key == "steps") steps = parse_number<int>(key, value);
    else if (key == "batch_size") batch_size = parse_number<int>(key, value);
    else if (key == "patch_size") patch_size = parse_number<int>(key, value);
    else if (key == "base_lr") base_lr = parse_number<double>(key, value);
    else if (key == "decay_factor") decay_factor = parse_number<double>(key, value);
    else if (key == "decay_interval") decay_interval = parse_number<std::int64_t>(key, value);
    else if (key == "seed") seed = parse_number<std::uint64_t>(key, value);
    else if (key == "guidance_channels") guidance_channels = parse_number<int>(key, value);
    else if (key == "patches_per_pair") patches_per_pair = parse_number<int>(key, value);
    else if (key == "augment") augment = parse_bool(key, value);
    else if (key == "optimizer") {
        try {
            optimizer = parse_optimizer_kind(value);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(key + ": " + e.what());
        }
    } else {
        throw ConfigError("unknown key '" + key + "'");
    }
}

void RunConfig::validate() const {
    auto fail = [](const std::string& msg) { throw ConfigError(msg); };
    if (levels < 0 || levels > 8) fail(fmt::format("levels: {} is outside 0..8", levels));
    if (factor != 2 && factor != 4 && factor != 8 && factor != 16) {
        fail(fmt::format("factor: {} is not one of 2, 4, 8, 16", factor));
    }
    if (steps < 0) fail(fmt::format("steps: {} is negative", steps));
    if (batch_size < 1) fail(fmt::format("batch_size: {} must be at least 1", batch_size));
    if (patch_size < 1 || patch_size % (1 << levels) != 0 || patch_size % factor != 0) {
        fail(fmt::format("patch_size: {} must be a positive multiple of 2^levels ({}) and of factor ({})",
                         patch_size, 1 << levels, factor));
    }
    if (!(base_lr > 0)) fail(fmt::format("base_lr: {} must be positive", base_lr));
    if (!(decay_factor > 0 && decay_factor <= 1)) fail(fmt::format("decay_factor: {} is outside (0, 1]", decay_factor));
    if (decay_interval < 1) fail(fmt::format("decay_interval: {} must be at least 1", decay_interval));
    if (guidance_channels != 1 && guidance_channels != 3) {
        fail(fmt::format("guidance_channels: {} is not 1 or 3", guidance_channels));
    }
    if (patches_per_pair < 1) fail(fmt::format("patches_per_pair: {} must be at least 1", patches_per_pair));
}

std::vector<std::string> RunConfig::to_lines() const {
    return {fmt::format("levels={}", levels),
            fmt::format("factor={}", factor),
            fmt::format("steps={}", steps),
            fmt::format("batch_size={}", batch_size),
            fmt::format("patch_size={}", patch_size),
            fmt::format("base_lr={}", base_lr),
            fmt::format("decay_factor={}", decay_factor),
            fmt::format("decay_interval={}", decay_interval),
            fmt::format("seed={}", seed),
            fmt::format("optimizer={}", to_string(optimizer)),
            fmt::format("guidance_channels={}", guidance_channels),
            fmt::format("patches_per_pair={}", patches_per_pair),
            fmt::format("augment={}", augment)};
}

RunConfig parse_config_text(const std::string& text, const std::string& source) {
    RunConfig config;
    std::map<std::string, int> seen;  // key -> line
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(raw.substr(0, raw.find('#')));
        if (line.empty()) continue;
        const auto where = fmt::format("{}:{}: ", source, line_no);
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + "expected key=value, got '" + line + "'");
        const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        if (!seen.emplace(key, line_no).second) throw ConfigError(where + "duplicate key '" + key + "'");
        try {
            config.set(key, value);
        } catch (const ConfigError& e) {
            throw ConfigError(where + e.what());
        }
    }
    try {
        config.validate();
    } catch (const ConfigError& e) {
        // Validation messages start with the key; point at the line that set it.
        const std::string msg = e.what();
        const auto it = seen.find(msg.substr(0, msg.find(':')));
        throw ConfigError(it == seen.end() ? source + ": " + msg : fmt::format("{}:{}: {}", source, it->second, msg));
    }
    return config;
}

RunConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(path.string() + ": cannot open config file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path.string());
}

}  // namespace jcnp
