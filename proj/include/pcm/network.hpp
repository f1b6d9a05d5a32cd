#ifndef PCM_NETWORK_HPP_
#define PCM_NETWORK_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pcm/mask.hpp"
#include "pcm/types.hpp"

namespace pcm {

inline double leaky_relu(double x, double slope) noexcept { return x >= 0.0 ? x : slope * x; }

struct Activation {
  enum class Kind : std::uint8_t { kLinear = 0, kLeakyRelu = 1 };

  Kind kind = Kind::kLinear;
  double slope = 0.0;  // only meaningful for kLeakyRelu, in (0, 1)

  static Activation linear() { return {}; }
  static Activation leaky(double slope);

  friend bool operator==(const Activation&, const Activation&) = default;
};

struct DenseLayer {
  Matrix weights;  // out x in
  Vector bias;     // out
  Activation activation;

  Index inputs() const noexcept { return weights.cols(); }
  Index outputs() const noexcept { return weights.rows(); }
  std::size_t parameter_count() const noexcept {
    return static_cast<std::size_t>(weights.size() + bias.size());
  }
};

enum class Mode : std::uint8_t { kPreMask = 0, kMask = 1 };

std::string to_string(Mode mode);

// Dense single-output regressor.
//
// Pre-mask mode:  x -> input_kernel (d x d, linear) -> hidden... -> output
// Mask mode:      x -> x * mask (element-wise)      -> hidden... -> output
//
// Exactly one of `input_kernel` / `mask` is set, matching `mode`.
struct Network {
  Mode mode = Mode::kPreMask;
  std::optional<DenseLayer> input_kernel;
  std::optional<BinaryMask> mask;
  std::vector<DenseLayer> hidden;
  DenseLayer output;

  std::size_t input_dim() const;
  std::size_t parameter_count() const;

  // Throws ShapeError/UsageError if any structural invariant is broken.
  void validate() const;

  // Trainable arrays in declared order: input kernel (W, b) if present,
  // each hidden layer (W, b), output (W, b).
  std::vector<std::span<double>> parameter_blocks();
  std::vector<std::span<const double>> parameter_blocks() const;
};

struct Architecture {
  std::size_t inputs = 0;
  std::vector<std::size_t> hidden_widths;
  double negative_slope = 0.3;

  // Nine hidden layers of 256 units, Leaky ReLU with slope 0.3.
  static Architecture reference_default(std::size_t inputs);
  void validate() const;

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

Architecture architecture_of(const Network& net);

// Glorot-uniform weights, U(-a, a) with a = sqrt(6 / (fan_in + fan_out)),
// zero biases, drawn layer by layer in declared order from one
// mt19937_64 seeded with derive_seed(seed, stream::kInit).
Network make_premask_network(const Architecture& arch, std::uint64_t seed);
Network make_mask_network(const Architecture& arch, const BinaryMask& mask, std::uint64_t seed);

// Warm start for the mask phase: copies hidden and output layers, drops W1.
Network to_mask_network(const Network& premask, BinaryMask mask);

// Predictions for every row of `batch` (N x d). Evaluated in chunks of
// `chunk` rows to bound memory; results do not depend on the chunk size.
Vector forward(const Network& net, const Matrix& batch);
Vector predict(const Network& net, const Matrix& inputs, std::size_t chunk = 8192);

struct LossBreakdown {
  double mse = 0.0;
  double l1_penalty = 0.0;  // lambda * ||vec(W1)||_1 / d^2
  double total = 0.0;       // mse + l1_penalty
};

// lambda * sum|W1| / d^2. Input-kernel bias is not penalized.
double input_kernel_penalty(const Network& net, double lambda);

LossBreakdown loss_premask(const Network& net, const Matrix& batch, const Vector& targets,
                           double lambda);
LossBreakdown loss_mask(const Network& net, const Matrix& batch, const Vector& targets);

// Dispatches on net.mode; lambda must be 0 in mask mode.
LossBreakdown loss(const Network& net, const Matrix& batch, const Vector& targets, double lambda);

struct LayerGradient {
  Matrix weights;
  Vector bias;
};

struct Gradients {
  std::optional<LayerGradient> input_kernel;
  std::vector<LayerGradient> hidden;
  LayerGradient output;

  static Gradients zeros_like(const Network& net);
  std::vector<std::span<const double>> blocks() const;
};

struct BackwardResult {
  LossBreakdown loss;
  Gradients gradients;
};

// Loss and its gradient w.r.t. every trainable parameter. The L1
// subgradient at exactly zero is taken as zero.
BackwardResult backward(const Network& net, const Matrix& batch, const Vector& targets,
                        double lambda);

}  // namespace pcm

#endif  // PCM_NETWORK_HPP_
