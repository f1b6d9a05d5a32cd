#include "pcm/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "pcm/error.hpp"
#include "pcm/rng.hpp"

namespace pcm {
namespace {

constexpr std::uint64_t kWeightStream = 0x57;
constexpr std::uint64_t kSampleStream = 0x58;

std::vector<double> draw_weights(std::size_t n, Rng& rng) {
  std::uniform_real_distribution<double> magnitude(0.6, 1.2);
  std::vector<double> w(n);
  for (auto& v : w) {
    const double m = magnitude(rng);
    v = (rng() & 1u) ? m : -m;
  }
  return w;
}

double weight_norm(const std::vector<double>& w) {
  double s = 0.0;
  for (double v : w) s += v * v;
  return std::sqrt(s);
}

}  // namespace

std::string to_string(Mechanism m) {
  return m == Mechanism::kSparseLinear ? "sparse_linear" : "column_nonlinear";
}

Mechanism parse_mechanism(const std::string& name) {
  if (name == "sparse_linear") return Mechanism::kSparseLinear;
  if (name == "column_nonlinear") return Mechanism::kColumnNonlinear;
  throw ValidationError("mechanism", "unknown mechanism \"" + name + "\"");
}

std::size_t SyntheticSpec::channels() const {
  return column.levels == 0 ? 0 : d / column.levels;
}

void SyntheticSpec::validate() const {
  if (d == 0) throw ValidationError("d", "must be >= 1");
  if (n_samples < 2) throw ValidationError("n_samples", "must be >= 2");
  if (!(spurious_corr >= 0.0 && spurious_corr < 1.0)) {
    throw ValidationError("spurious_corr", "must lie in [0, 1)");
  }
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) {
    throw ValidationError("noise_std", "must be finite and >= 0");
  }
  if (n_groups == 0) throw ValidationError("n_groups", "must be >= 1");

  if (mechanism == Mechanism::kSparseLinear) {
    if (driver_set.empty()) throw ValidationError("driver_set", "is empty");
    std::vector<std::size_t> sorted = driver_set;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw ValidationError("driver_set", "contains duplicates");
    }
    if (sorted.back() >= d) throw ValidationError("driver_set", "index out of range [0, d)");
    if (!driver_weights.empty() && driver_weights.size() != driver_set.size()) {
      throw ValidationError("driver_weights", "length must match driver_set");
    }
    if (shift != 0) throw ValidationError("shift", "only supported for column_nonlinear");
    return;
  }

  const auto& c = column;
  if (c.levels == 0 || d % c.levels != 0) throw ValidationError("levels", "must divide d");
  if (!driver_set.empty()) {
    throw ValidationError("driver_set", "column_nonlinear derives its drivers from the layout");
  }
  if (c.lower_channel >= channels()) throw ValidationError("lower_channel", "out of range");
  if (c.lower_levels == 0) throw ValidationError("lower_levels", "must be >= 1");
  if (c.window_radius > c.target_level) throw ValidationError("window_radius", "exceeds target_level");
  if (c.lower_levels + c.window_radius > c.target_level) {
    throw ValidationError("lower_levels", "overlaps the local window");
  }
  const long levels = static_cast<long>(c.levels);
  const long window_hi = static_cast<long>(c.target_level + c.window_radius) + shift;
  const long lower_hi = static_cast<long>(c.lower_levels) - 1 + shift;
  // The lower block starts at level `shift`, so shifts must be >= 0.
  if (shift < 0 || window_hi >= levels || lower_hi >= levels) {
    throw ValidationError("shift", "moves the driver blocks outside [0, levels)");
  }
  if (!driver_weights.empty()) {
    throw ValidationError("driver_weights", "not supported for column_nonlinear");
  }
}

std::vector<std::size_t> column_drivers(const SyntheticSpec& spec, int shift) {
  const auto& c = spec.column;
  std::vector<std::size_t> out;
  for (std::size_t ch = 0; ch < spec.channels(); ++ch) {
    for (std::size_t l = c.target_level - c.window_radius; l <= c.target_level + c.window_radius; ++l) {
      out.push_back(column_index(ch, static_cast<std::size_t>(static_cast<long>(l) + shift), c.levels));
    }
  }
  for (std::size_t l = 0; l < c.lower_levels; ++l) {
    out.push_back(column_index(c.lower_channel, static_cast<std::size_t>(static_cast<long>(l) + shift),
                               c.levels));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

StructuralModel make_structural_model(const SyntheticSpec& spec) {
  spec.validate();
  StructuralModel model;
  model.mechanism = spec.mechanism;
  Rng rng(derive_seed(spec.seed, kWeightStream));

  if (spec.mechanism == Mechanism::kSparseLinear) {
    model.linear_index = spec.driver_set;
    model.linear_weight =
        spec.driver_weights.empty() ? draw_weights(spec.driver_set.size(), rng) : spec.driver_weights;
    model.drivers = spec.driver_set;
    std::sort(model.drivers.begin(), model.drivers.end());

    model.confounder_of.assign(spec.d, spec.d);
    std::size_t k = 0;
    for (std::size_t j = 0; j < spec.d; ++j) {
      if (std::binary_search(model.drivers.begin(), model.drivers.end(), j)) continue;
      if (k % 2 == 0) model.confounder_of[j] = spec.driver_set[(k / 2) % spec.driver_set.size()];
      ++k;
    }
    return model;
  }

  const auto& c = spec.column;
  for (std::size_t ch = 0; ch < spec.channels(); ++ch) {
    for (std::size_t l = c.target_level - c.window_radius; l <= c.target_level + c.window_radius; ++l) {
      model.window_index.push_back(
          column_index(ch, static_cast<std::size_t>(static_cast<long>(l) + spec.shift), c.levels));
    }
  }
  for (std::size_t l = 0; l < c.lower_levels; ++l) {
    model.lower_index.push_back(column_index(
        c.lower_channel, static_cast<std::size_t>(static_cast<long>(l) + spec.shift), c.levels));
  }
  // Weights depend only on the seed, so a shifted spec keeps the same
  // mechanism at translated positions.
  model.window_weight = draw_weights(model.window_index.size(), rng);
  model.lower_weight = draw_weights(model.lower_index.size(), rng);
  model.drivers = column_drivers(spec, spec.shift);
  return model;
}

double StructuralModel::response(std::span<const double> x) const {
  if (mechanism == Mechanism::kSparseLinear) {
    double y = 0.0;
    for (std::size_t k = 0; k < linear_index.size(); ++k) y += linear_weight[k] * x[linear_index[k]];
    return y;
  }
  double z1 = 0.0;
  for (std::size_t k = 0; k < window_index.size(); ++k) z1 += window_weight[k] * x[window_index[k]];
  double z2 = 0.0;
  for (std::size_t k = 0; k < lower_index.size(); ++k) z2 += lower_weight[k] * x[lower_index[k]];
  z1 /= weight_norm(window_weight);
  z2 /= weight_norm(lower_weight);
  return 1.5 * std::tanh(z1) + 0.8 * z2 + 0.4 * z1 * z2;
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
  const StructuralModel model = make_structural_model(spec);
  Rng rng(derive_seed(spec.seed, kSampleStream));
  std::normal_distribution<double> normal(0.0, 1.0);
  const double rho = spec.spurious_corr;
  const double innovation = std::sqrt(1.0 - rho * rho);

  Dataset data;
  data.schema = DatasetSchema::generic(spec.d);
  if (spec.n_groups > 1) data.schema.group_column = "group";
  data.inputs.resize(static_cast<Index>(spec.n_samples), static_cast<Index>(spec.d));
  data.targets.resize(static_cast<Index>(spec.n_samples));
  if (spec.n_groups > 1) data.groups.resize(spec.n_samples);
  data.truth_drivers = model.drivers;

  std::vector<double> x(spec.d);
  for (std::size_t r = 0; r < spec.n_samples; ++r) {
    if (spec.mechanism == Mechanism::kSparseLinear) {
      for (std::size_t j = 0; j < spec.d; ++j) x[j] = normal(rng);
      for (std::size_t j = 0; j < spec.d; ++j) {
        if (model.confounder_of[j] < spec.d) x[j] = rho * x[model.confounder_of[j]] + innovation * x[j];
      }
    } else {
      const auto levels = spec.column.levels;
      for (std::size_t ch = 0; ch < spec.channels(); ++ch) {
        double prev = normal(rng);
        x[column_index(ch, 0, levels)] = prev;
        for (std::size_t l = 1; l < levels; ++l) {
          prev = rho * prev + innovation * normal(rng);
          x[column_index(ch, l, levels)] = prev;
        }
      }
    }
    const double noise = spec.noise_std > 0.0 ? spec.noise_std * normal(rng) : 0.0;
    const auto row = static_cast<Index>(r);
    for (std::size_t j = 0; j < spec.d; ++j) data.inputs(row, static_cast<Index>(j)) = x[j];
    data.targets[row] = model.response(x) + noise;
    if (spec.n_groups > 1) data.groups[r] = static_cast<std::int64_t>(rng() % spec.n_groups);
  }
  return data;
}

}  // namespace pcm
