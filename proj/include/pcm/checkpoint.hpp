#ifndef PCM_CHECKPOINT_HPP_
#define PCM_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>

#include "pcm/network.hpp"

namespace pcm {

// Binary network checkpoint. Byte layout is documented in docs/formats.md;
// all scalars little-endian, reals IEEE-754 binary64, matrices row-major.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  Network network;
  std::uint64_t seed = 0;
};

void save_checkpoint(const std::filesystem::path& path, const Network& net, std::uint64_t seed);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace pcm

#endif  // PCM_CHECKPOINT_HPP_
