#ifndef PCM_DRIVERS_HPP_
#define PCM_DRIVERS_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "pcm/mask.hpp"

namespace pcm {

// Precision/recall of a selected mask against known drivers. An empty
// selection leaves precision undefined; an empty truth set leaves recall
// undefined.
struct DriverRecoveryReport {
  std::optional<double> precision;
  std::optional<double> recall;
  std::vector<std::size_t> selected;
  std::vector<std::size_t> truth;
  std::size_t true_positives = 0;

  bool exact() const noexcept { return precision == 1.0 && recall == 1.0; }
};

DriverRecoveryReport driver_recovery(const BinaryMask& selected, std::vector<std::size_t> truth);

struct GroupOverlap {
  std::int64_t group = 0;
  std::vector<std::size_t> only_a;
  std::vector<std::size_t> only_b;
  std::vector<std::size_t> both;
};

struct OverlapReport {
  std::vector<GroupOverlap> groups;  // ascending group id, groups with any set bit
  std::size_t only_a = 0;
  std::size_t only_b = 0;
  std::size_t both = 0;
  std::optional<double> jaccard;  // |A & B| / |A | B|; empty when both masks are empty
};

// Partitions the union of set bits into only-A / only-B / both, per group.
// Without a grouping every index is its own group.
OverlapReport compare_masks(const BinaryMask& a, const BinaryMask& b,
                            const std::vector<std::int64_t>* grouping = nullptr);

// Level id of each index for a channel-major layout (index = channel *
// levels + level).
std::vector<std::int64_t> level_grouping(std::size_t d, std::size_t levels);

// Moves every set bit by `delta` levels within its channel; bits pushed
// outside [0, levels) are dropped.
BinaryMask translate_levels(const BinaryMask& mask, std::size_t levels, int delta);

}  // namespace pcm

#endif  // PCM_DRIVERS_HPP_
