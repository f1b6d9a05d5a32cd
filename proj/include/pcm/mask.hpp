#ifndef PCM_MASK_HPP_
#define PCM_MASK_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace pcm {

// Raw per-input signal strengths: L2 norms of the input-kernel columns.
struct MaskVector {
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  void validate() const;
};

// Thresholded mask. bits[j] == 1 iff the raw value is >= threshold.
struct BinaryMask {
  std::vector<std::uint8_t> bits;
  double threshold = 0.0;

  std::size_t size() const noexcept { return bits.size(); }
  std::size_t selected_count() const noexcept;
  std::vector<std::size_t> selected_indices() const;

  static BinaryMask all_ones(std::size_t d);
  static BinaryMask from_indices(std::size_t d, const std::vector<std::size_t>& indices);

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;
};

BinaryMask binarize(const MaskVector& m, double threshold);

// Sorted threshold candidates in [1e-4, p70), rounded to four decimals.
struct ThresholdGrid {
  std::vector<double> thresholds;
  double p70 = 0.0;
  std::size_t requested = 0;  // n before de-duplication
};

inline constexpr double kGridLowerBound = 1e-4;

// Percentile by linear interpolation between order statistics:
// position q/100 * (n - 1) in the ascending sort (numpy's default).
double percentile(std::vector<double> values, double q);

double round_to_decimals(double value, int decimals);

// t_i = 1e-4 + i * (p70 - 1e-4) / n for i in [0, n), each rounded to four
// decimals; duplicates collapsed. Throws DegenerateGridError if p70 <= 1e-4.
ThresholdGrid build_threshold_grid(const MaskVector& m, std::size_t n);

// Plain-text mask file: line 1 = d, line 2 = threshold, then d lines
// "raw_value bit".
void save_mask_file(const std::filesystem::path& path, const MaskVector& raw,
                    const BinaryMask& mask);
struct MaskFile {
  MaskVector raw;
  BinaryMask mask;
};
MaskFile load_mask_file(const std::filesystem::path& path);

}  // namespace pcm

#endif  // PCM_MASK_HPP_
