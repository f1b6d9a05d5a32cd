#ifndef PCM_OPTIM_HPP_
#define PCM_OPTIM_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pcm/network.hpp"

namespace pcm {

// ADAM with the usual defaults and bias correction.
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;

  static AdamState for_network(const Network& net);
  static AdamState for_shapes(const std::vector<std::size_t>& block_sizes);
};

// One update over parameter blocks. Shapes must match the state's moments.
void adam_step(AdamState& state, std::span<const std::span<double>> params,
               std::span<const std::span<const double>> gradients, double lr);
void adam_step(AdamState& state, Network& net, const Gradients& gradients, double lr);

struct LrSchedule {
  double initial_lr = 0.001;
  double decay_factor = 5.0;
  std::size_t decay_every = 3;

  void validate() const;
};

// initial_lr / decay_factor^floor(epoch / decay_every)
double lr_at_epoch(const LrSchedule& schedule, std::size_t epoch);

}  // namespace pcm

#endif  // PCM_OPTIM_HPP_
