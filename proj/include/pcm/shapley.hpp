#ifndef PCM_SHAPLEY_HPP_
#define PCM_SHAPLEY_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pcm/dataset.hpp"
#include "pcm/network.hpp"
#include "pcm/types.hpp"

namespace pcm {

// Black-box batched model: N x d inputs -> N predictions. Must be a pure
// function of its input matrix.
using Predictor = std::function<Vector(const Matrix&)>;

Predictor as_predictor(const Network& net);

// Interventional value function: v(S) is the mean prediction over the
// background rows with the features in S taken from x.
//
// Coalitions are evaluated one model call per coalition with an identical
// row layout, so features the model ignores get exactly zero attribution.
inline constexpr std::size_t kMaxExactFeatures = 15;

// Exact Shapley values by enumerating all 2^d coalitions. Throws
// UsageError for d > kMaxExactFeatures.
Vector shapley_exact(const Predictor& model, std::span<const double> x, const Matrix& background);

struct ShapleyEstimate {
  Vector values;
  Vector standard_error;  // sd of per-permutation marginals / sqrt(n)
  std::size_t permutations = 0;
};

// Permutation sampling. Each permutation draws one background row b and
// walks the features in permutation order, switching each from b to x;
// the marginal for a feature is the prediction change at its step. Every
// permutation is an unbiased draw of the exact value.
ShapleyEstimate shapley_sampled(const Predictor& model, std::span<const double> x,
                                const Matrix& background, std::size_t n_permutations,
                                std::uint64_t seed);

enum class ShapleyMethod { kExact, kSampled };

struct AttributionOptions {
  ShapleyMethod method = ShapleyMethod::kSampled;
  std::size_t permutations = 64;
  std::uint64_t seed = 42;
  std::size_t jobs = 1;
};

// Mean over samples of |phi_j|.
Vector mean_abs_attribution(const Predictor& model, const Matrix& samples, const Matrix& background,
                            const AttributionOptions& options = {});

struct AttributionMatrix {
  Matrix values;  // outputs x inputs, mean |phi|
  std::vector<std::string> output_names;
  std::vector<std::string> input_names;
  std::size_t sample_count = 0;
  std::string baseline;
  bool physical_units = false;
};

// `n` rows of `data` drawn without replacement with a fixed seed.
Matrix draw_rows(const Dataset& data, std::size_t n, std::uint64_t seed);

inline constexpr std::size_t kDefaultBackgroundRows = 100;
inline constexpr std::size_t kDefaultAttributionSamples = 1000;

}  // namespace pcm

#endif  // PCM_SHAPLEY_HPP_
