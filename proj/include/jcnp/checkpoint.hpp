#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "jcnp/image.hpp"
#include "jcnp/model.hpp"

namespace jcnp {

/// Corrupt, truncated or incompatible checkpoint.
class CheckpointError : public DataError {
public:
    using DataError::DataError;
};

/// Architecture fields embedded in every checkpoint.
struct CheckpointMeta {
    std::uint32_t levels = 2;
    std::uint32_t factor = 4;
    std::uint32_t guidance_channels = 1;

    bool operator==(const CheckpointMeta&) const = default;
};

struct Checkpoint {
    CheckpointMeta meta;
    JcnpModel<float> model;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/**
 * Binary layout, all integers 32-bit little-endian:
 *   "JCNP" | version | levels | factor | guidance_channels | entry_count |
 *   entry_count x ( name_len | name (UTF-8) | rank | dims[rank] | float32 LE values )
 * Entries follow the network's parameter order.
 */
std::vector<std::uint8_t> serialize_checkpoint(const JcnpModel<float>& model, std::uint32_t factor);
Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes,
                                  const std::optional<CheckpointMeta>& expected = std::nullopt);

void save_checkpoint(const JcnpModel<float>& model, std::uint32_t factor,
                     const std::filesystem::path& path);

/// With `expected`, a checkpoint built for a different architecture is rejected.
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const std::optional<CheckpointMeta>& expected = std::nullopt);

}  // namespace jcnp
