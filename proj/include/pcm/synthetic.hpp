#ifndef PCM_SYNTHETIC_HPP_
#define PCM_SYNTHETIC_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pcm/dataset.hpp"

namespace pcm {

// Generators with known ground-truth drivers.
//
// SparseLinear
//   Drivers are independent N(0, 1); y = sum_j w_j x_j + noise. Every other
//   non-driver (0th, 2nd, ...) is a confounder of one driver,
//   x_c = rho * x_driver + sqrt(1 - rho^2) * e, with no effect on y; the
//   rest are independent N(0, 1).
//
// ColumnNonlinear
//   d = levels x channels inputs, feature index = channel * levels + level.
//   Each channel is an AR(1) profile along the levels with lag-one
//   correlation rho. The target depends on a local window of levels around
//   target_level (all channels) and on a block of the lowest levels of one
//   channel:
//     z1 = window sum, z2 = lower-block sum (each scaled by its weight norm)
//     y  = 1.5 tanh(z1) + 0.8 z2 + 0.4 z1 z2 + noise
//   A shift of s moves both driver blocks up by s levels.
enum class Mechanism : std::uint8_t { kSparseLinear = 0, kColumnNonlinear = 1 };

std::string to_string(Mechanism m);
Mechanism parse_mechanism(const std::string& name);

struct ColumnLayout {
  std::size_t levels = 12;
  std::size_t target_level = 5;
  std::size_t window_radius = 1;
  std::size_t lower_levels = 3;
  std::size_t lower_channel = 0;
};

struct SyntheticSpec {
  Mechanism mechanism = Mechanism::kSparseLinear;
  std::size_t d = 20;
  std::size_t n_samples = 50000;
  std::vector<std::size_t> driver_set;  // SparseLinear only
  std::vector<double> driver_weights;   // optional; drawn from the seed if empty
  double spurious_corr = 0.8;
  double noise_std = 0.1;
  int shift = 0;  // ColumnNonlinear only
  std::uint64_t seed = 42;
  ColumnLayout column;
  std::size_t n_groups = 1;  // > 1 attaches a uniform random group id per row

  std::size_t channels() const;
  // Throws ValidationError naming the offending field.
  void validate() const;
};

inline std::size_t column_index(std::size_t channel, std::size_t level, std::size_t levels) {
  return channel * levels + level;
}

// Noise-free structural equation of a spec, with the ground-truth drivers.
struct StructuralModel {
  Mechanism mechanism = Mechanism::kSparseLinear;
  std::vector<std::size_t> drivers;  // sorted
  // SparseLinear: drivers/weights pair up. ColumnNonlinear: the window and
  // the lower block each carry their own weights.
  std::vector<std::size_t> linear_index;
  std::vector<double> linear_weight;
  std::vector<std::size_t> window_index;
  std::vector<double> window_weight;
  std::vector<std::size_t> lower_index;
  std::vector<double> lower_weight;
  // SparseLinear: confounded driver for each input, or d when none.
  std::vector<std::size_t> confounder_of;

  double response(std::span<const double> x) const;
};

StructuralModel make_structural_model(const SyntheticSpec& spec);

// Driver set for ColumnNonlinear at the given shift, sorted.
std::vector<std::size_t> column_drivers(const SyntheticSpec& spec, int shift);

// Unsplit dataset with truth_drivers set and a generic schema.
Dataset generate_synthetic(const SyntheticSpec& spec);

}  // namespace pcm

#endif  // PCM_SYNTHETIC_HPP_
