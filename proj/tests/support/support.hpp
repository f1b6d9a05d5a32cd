#ifndef PCM_TESTS_SUPPORT_HPP_
#define PCM_TESTS_SUPPORT_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pcm/dataset.hpp"
#include "pcm/network.hpp"

namespace pcm::testing {

// Random network with nonzero biases; mask mode draws a random mask that
// keeps each input with probability 0.6 (at least one input kept).
Network random_network(std::size_t d, const std::vector<std::size_t>& widths, Mode mode,
                       std::uint64_t seed);

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double scale = 1.0);
Vector random_vector(std::size_t n, std::uint64_t seed, double scale = 1.0);

struct GradientCheck {
  std::size_t checked = 0;
  std::size_t skipped = 0;  // entries within `step` of the L1 kink
  std::size_t failures = 0;
  double max_relative_error = 0.0;
};

// Central differences of the total loss for every parameter. The relative
// error is |a - n| / max(|a|, |n|), with an absolute floor of 1e-9 below
// which both values count as zero.
GradientCheck check_gradients(const Network& net, const Matrix& x, const Vector& y, double lambda,
                              double step = 1e-5, double tolerance = 1e-4);

// Fresh, empty directory under the system temp path.
std::filesystem::path fresh_dir(const std::string& name);

// y = x * w + noise on standard-normal inputs.
Dataset linear_dataset(std::size_t n, const std::vector<double>& w, double noise, std::uint64_t seed);

std::string read_file(const std::filesystem::path& path);

}  // namespace pcm::testing

#endif  // PCM_TESTS_SUPPORT_HPP_
