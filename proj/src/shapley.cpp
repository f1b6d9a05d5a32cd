#include "pcm/shapley.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "pcm/error.hpp"
#include "pcm/rng.hpp"

namespace pcm {
namespace {

void check_inputs(std::span<const double> x, const Matrix& background) {
  if (background.rows() == 0) throw UsageError("background set is empty");
  if (static_cast<std::size_t>(background.cols()) != x.size()) {
    throw ShapeError("sample and background widths differ");
  }
}

Vector call_model(const Predictor& model, const Matrix& rows) {
  Vector out = model(rows);
  if (out.size() != rows.rows()) throw ShapeError("model returned the wrong number of predictions");
  return out;
}

// s! (d - s - 1)! / d! for s = 0 .. d-1.
std::vector<double> coalition_weights(std::size_t d) {
  std::vector<double> w(d);
  for (std::size_t s = 0; s < d; ++s) {
    w[s] = std::exp(std::lgamma(static_cast<double>(s) + 1.0) +
                    std::lgamma(static_cast<double>(d - s)) - std::lgamma(static_cast<double>(d) + 1.0));
  }
  return w;
}

}  // namespace

Predictor as_predictor(const Network& net) {
  return [net](const Matrix& rows) { return predict(net, rows); };
}

Vector shapley_exact(const Predictor& model, std::span<const double> x, const Matrix& background) {
  check_inputs(x, background);
  const std::size_t d = x.size();
  if (d > kMaxExactFeatures) {
    throw UsageError("exact Shapley enumeration supports at most " + std::to_string(kMaxExactFeatures) +
                     " features; use the sampled estimator for d = " + std::to_string(d));
  }
  const std::size_t n_coalitions = std::size_t{1} << d;
  std::vector<double> value(n_coalitions);
  Matrix rows(background.rows(), background.cols());
  for (std::size_t s = 0; s < n_coalitions; ++s) {
    rows = background;
    for (std::size_t j = 0; j < d; ++j) {
      if (s & (std::size_t{1} << j)) rows.col(static_cast<Index>(j)).setConstant(x[j]);
    }
    value[s] = call_model(model, rows).mean();
  }

  const auto weight = coalition_weights(d);
  Vector phi = Vector::Zero(static_cast<Index>(d));
  for (std::size_t j = 0; j < d; ++j) {
    const std::size_t bit = std::size_t{1} << j;
    double acc = 0.0;
    for (std::size_t s = 0; s < n_coalitions; ++s) {
      if (s & bit) continue;
      acc += weight[static_cast<std::size_t>(std::popcount(s))] * (value[s | bit] - value[s]);
    }
    phi[static_cast<Index>(j)] = acc;
  }
  return phi;
}

ShapleyEstimate shapley_sampled(const Predictor& model, std::span<const double> x,
                                const Matrix& background, std::size_t n_permutations,
                                std::uint64_t seed) {
  check_inputs(x, background);
  if (n_permutations < 1) throw UsageError("need at least one permutation");
  const std::size_t d = x.size();
  constexpr std::size_t kChunk = 1024;

  Rng rng(seed);
  std::vector<double> sum(d, 0.0);
  std::vector<double> sum_sq(d, 0.0);
  std::vector<std::size_t> order(d);
  std::vector<std::vector<std::size_t>> perms;

  for (std::size_t done = 0; done < n_permutations;) {
    const std::size_t p_count = std::min(kChunk, n_permutations - done);
    perms.assign(p_count, {});
    Matrix cur(static_cast<Index>(p_count), static_cast<Index>(d));
    for (std::size_t p = 0; p < p_count; ++p) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      shuffle_indices(order, rng);
      perms[p] = order;
      const auto b = static_cast<Index>(rng() % static_cast<std::uint64_t>(background.rows()));
      cur.row(static_cast<Index>(p)) = background.row(b);
    }
    // Same matrix shape and row positions at every step, so a feature the
    // model ignores yields bit-identical predictions and a zero marginal.
    Vector prev = call_model(model, cur);
    for (std::size_t k = 0; k < d; ++k) {
      for (std::size_t p = 0; p < p_count; ++p) {
        const std::size_t j = perms[p][k];
        cur(static_cast<Index>(p), static_cast<Index>(j)) = x[j];
      }
      Vector next = call_model(model, cur);
      for (std::size_t p = 0; p < p_count; ++p) {
        const std::size_t j = perms[p][k];
        const double m = next[static_cast<Index>(p)] - prev[static_cast<Index>(p)];
        sum[j] += m;
        sum_sq[j] += m * m;
      }
      prev = std::move(next);
    }
    done += p_count;
  }

  ShapleyEstimate est;
  est.permutations = n_permutations;
  est.values.resize(static_cast<Index>(d));
  est.standard_error.resize(static_cast<Index>(d));
  const double n = static_cast<double>(n_permutations);
  for (std::size_t j = 0; j < d; ++j) {
    const double mean = sum[j] / n;
    est.values[static_cast<Index>(j)] = mean;
    if (n_permutations < 2) {
      est.standard_error[static_cast<Index>(j)] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    const double var = std::max(0.0, (sum_sq[j] - n * mean * mean) / (n - 1.0));
    est.standard_error[static_cast<Index>(j)] = std::sqrt(var / n);
  }
  return est;
}

Vector mean_abs_attribution(const Predictor& model, const Matrix& samples, const Matrix& background,
                            const AttributionOptions& options) {
  if (samples.rows() == 0) throw UsageError("no samples to attribute");
  if (samples.cols() != background.cols()) throw ShapeError("sample and background widths differ");
  const auto n = static_cast<std::size_t>(samples.rows());
  const auto d = samples.cols();
  std::vector<Vector> per_sample(n);

  auto run_one = [&](std::size_t i) {
    const Vector x = samples.row(static_cast<Index>(i)).transpose();
    const std::span<const double> xs(x.data(), static_cast<std::size_t>(x.size()));
    per_sample[i] = options.method == ShapleyMethod::kExact
                        ? shapley_exact(model, xs, background)
                        : shapley_sampled(model, xs, background, options.permutations,
                                          derive_seed(options.seed, i))
                              .values;
  };

  const std::size_t workers = std::clamp<std::size_t>(options.jobs, 1, n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) run_one(i);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < n; i += workers) run_one(i);
      });
    }
    for (auto& t : pool) t.join();
  }

  Vector acc = Vector::Zero(d);
  for (const auto& phi : per_sample) acc += phi.cwiseAbs();
  return acc / static_cast<double>(n);
}

Matrix draw_rows(const Dataset& data, std::size_t n, std::uint64_t seed) {
  if (data.rows() == 0) throw UsageError("cannot draw rows from an empty dataset");
  std::vector<std::size_t> idx(data.rows());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(derive_seed(seed, stream::kBackground));
  shuffle_indices(idx, rng);
  const std::size_t take = std::min(n, idx.size());
  Matrix out(static_cast<Index>(take), data.inputs.cols());
  for (std::size_t r = 0; r < take; ++r) out.row(static_cast<Index>(r)) = data.inputs.row(static_cast<Index>(idx[r]));
  return out;
}

}  // namespace pcm
