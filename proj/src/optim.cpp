#include "pcm/optim.hpp"

#include <cmath>
#include <string>

#include "pcm/error.hpp"

namespace pcm {

AdamState AdamState::for_shapes(const std::vector<std::size_t>& block_sizes) {
  AdamState state;
  for (std::size_t n : block_sizes) {
    state.first_moment.emplace_back(n, 0.0);
    state.second_moment.emplace_back(n, 0.0);
  }
  return state;
}

AdamState AdamState::for_network(const Network& net) {
  std::vector<std::size_t> sizes;
  for (const auto& block : net.parameter_blocks()) sizes.push_back(block.size());
  return for_shapes(sizes);
}

void adam_step(AdamState& state, std::span<const std::span<double>> params,
               std::span<const std::span<const double>> gradients, double lr) {
  if (!(lr > 0.0)) throw UsageError("learning rate must be > 0");
  if (params.size() != gradients.size() || params.size() != state.first_moment.size()) {
    throw ShapeError("parameter, gradient and moment block counts differ");
  }
  for (std::size_t b = 0; b < params.size(); ++b) {
    if (params[b].size() != gradients[b].size() || params[b].size() != state.first_moment[b].size()) {
      throw ShapeError("block " + std::to_string(b) + ": parameter/gradient/moment sizes differ");
    }
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t b = 0; b < params.size(); ++b) {
    auto& m = state.first_moment[b];
    auto& v = state.second_moment[b];
    const auto g = gradients[b];
    const auto p = params[b];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p[i] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

void adam_step(AdamState& state, Network& net, const Gradients& gradients, double lr) {
  const auto params = net.parameter_blocks();
  const auto grads = gradients.blocks();
  adam_step(state, std::span<const std::span<double>>(params),
            std::span<const std::span<const double>>(grads), lr);
}

void LrSchedule::validate() const {
  if (!(initial_lr > 0.0)) throw ValidationError("lr_schedule.initial_lr", "must be > 0");
  if (!(decay_factor > 1.0)) throw ValidationError("lr_schedule.decay_factor", "must be > 1");
  if (decay_every < 1) throw ValidationError("lr_schedule.decay_every", "must be >= 1");
}

double lr_at_epoch(const LrSchedule& schedule, std::size_t epoch) {
  const auto decays = static_cast<double>(epoch / schedule.decay_every);
  return schedule.initial_lr / std::pow(schedule.decay_factor, decays);
}

}  // namespace pcm
