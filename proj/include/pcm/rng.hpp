#ifndef PCM_RNG_HPP_
#define PCM_RNG_HPP_

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace pcm {

// SplitMix64 finalizer. Used as the documented, platform-independent
// hash for deriving sub-seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// derive_seed(base, stream) = splitmix64(splitmix64(base) ^ stream).
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept {
  return splitmix64(splitmix64(base) ^ stream);
}

// Stream tags keep the independent consumers of one base seed apart.
namespace stream {
inline constexpr std::uint64_t kInit = 0x1;
inline constexpr std::uint64_t kPremaskBatches = 0x2;
inline constexpr std::uint64_t kMaskBatches = 0x3;
inline constexpr std::uint64_t kSplit = 0x4;
inline constexpr std::uint64_t kBackground = 0x5;
inline constexpr std::uint64_t kSamples = 0x6;
}  // namespace stream

using Rng = std::mt19937_64;

// Fisher-Yates with an explicit index draw, so the permutation for a given
// engine state does not depend on the standard library's std::shuffle.
inline void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(idx[i - 1], idx[j]);
  }
}

}  // namespace pcm

#endif  // PCM_RNG_HPP_
