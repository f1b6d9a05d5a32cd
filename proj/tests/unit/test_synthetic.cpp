#include <gtest/gtest.h>

#include <cmath>

#include "pcm/error.hpp"
#include "pcm/synthetic.hpp"

namespace pcm {
namespace {

double corr(const Vector& a, const Vector& b) {
  const auto ca = a.array() - a.mean();
  const auto cb = b.array() - b.mean();
  return (ca * cb).sum() / std::sqrt(ca.square().sum() * cb.square().sum());
}

SyntheticSpec column_spec(int shift = 0) {
  SyntheticSpec s;
  s.mechanism = Mechanism::kColumnNonlinear;
  s.d = 36;
  s.n_samples = 2000;
  s.shift = shift;
  return s;
}

TEST(SparseLinear, StructuralEquationExample) {
  SyntheticSpec s;
  s.d = 3;
  s.driver_set = {0};
  s.driver_weights = {2.0};
  s.noise_std = 0.0;
  const auto model = make_structural_model(s);
  const std::vector<double> x{1.0, 1.0, 1.0};
  EXPECT_EQ(model.response(x), 2.0);
}

TEST(SparseLinear, ConfounderCorrelation) {
  SyntheticSpec s;
  s.d = 6;
  s.driver_set = {1};
  s.spurious_corr = 0.9;
  s.n_samples = 50000;
  const auto model = make_structural_model(s);
  const auto data = generate_synthetic(s);
  std::size_t confounders = 0;
  for (std::size_t j = 0; j < s.d; ++j) {
    if (model.confounder_of[j] >= s.d) continue;
    ++confounders;
    const double r = corr(data.inputs.col(Index(j)), data.inputs.col(Index(model.confounder_of[j])));
    EXPECT_NEAR(r, 0.9, 0.05) << "column " << j;
  }
  EXPECT_GE(confounders, 1u);
}

TEST(SparseLinear, GeneratorHonesty) {
  for (double noise : {0.5, 0.1, 0.0}) {
    SyntheticSpec s;
    s.d = 8;
    s.driver_set = {0, 3, 5};
    s.noise_std = noise;
    s.n_samples = 20000;
    const auto model = make_structural_model(s);
    const auto data = generate_synthetic(s);
    Vector fitted(data.targets.size());
    for (Index i = 0; i < fitted.size(); ++i) {
      const Vector row = data.inputs.row(i).transpose();
      fitted[i] = model.response(std::span<const double>(row.data(), std::size_t(row.size())));
    }
    const Vector resid = data.targets - fitted;
    const double resid_sd = std::sqrt(resid.array().square().mean());
    EXPECT_NEAR(resid_sd, noise, noise * 0.05 + 1e-12) << noise;
    const double r2 = 1.0 - resid.squaredNorm() / (data.targets.array() - data.targets.mean()).square().sum();
    if (noise == 0.0) {
      EXPECT_EQ(r2, 1.0);
    }
  }
}

TEST(SparseLinear, TruthDriversAndDeterminism) {
  SyntheticSpec s;
  s.driver_set = {16, 2, 7, 11};
  const auto a = generate_synthetic(s);
  const auto b = generate_synthetic(s);
  EXPECT_EQ(a.truth_drivers, (std::vector<std::size_t>{2, 7, 11, 16}));
  EXPECT_EQ(a.inputs, b.inputs);
  EXPECT_EQ(a.targets, b.targets);
}

TEST(SyntheticSpec, ValidationNamesTheField) {
  SyntheticSpec s;
  auto field_of = [](const SyntheticSpec& spec) {
    try {
      spec.validate();
    } catch (const ValidationError& e) {
      return e.field();
    }
    return std::string();
  };
  EXPECT_EQ(field_of(s), "driver_set");
  s.driver_set = {25};
  EXPECT_EQ(field_of(s), "driver_set");
  s.driver_set = {1};
  s.spurious_corr = 1.0;
  EXPECT_EQ(field_of(s), "spurious_corr");
  s.spurious_corr = 0.5;
  s.shift = 1;
  EXPECT_EQ(field_of(s), "shift");
  auto c = column_spec(9);
  EXPECT_EQ(field_of(c), "shift");
}

TEST(ColumnNonlinear, ShiftTranslatesDriversByLevels) {
  const auto base = generate_synthetic(column_spec(0));
  const auto shifted = generate_synthetic(column_spec(2));
  ASSERT_TRUE(base.truth_drivers && shifted.truth_drivers);
  std::vector<std::size_t> translated;
  for (auto j : *base.truth_drivers) translated.push_back(j + 2);  // same channel, level + 2
  EXPECT_EQ(*shifted.truth_drivers, translated);
  EXPECT_EQ(base.truth_drivers->size(), 12u);
}

TEST(ColumnNonlinear, DriverLayout) {
  const auto drivers = column_drivers(column_spec(), 0);
  EXPECT_EQ(drivers, (std::vector<std::size_t>{0, 1, 2, 4, 5, 6, 16, 17, 18, 28, 29, 30}));
}

TEST(ColumnNonlinear, TargetIgnoresNonDrivers) {
  const auto spec = column_spec();
  const auto model = make_structural_model(spec);
  std::vector<double> x(36, 0.3);
  const double base = model.response(x);
  for (std::size_t j = 0; j < 36; ++j) {
    auto moved = x;
    moved[j] += 1.7;
    const bool driver = std::binary_search(model.drivers.begin(), model.drivers.end(), j);
    if (driver) {
      EXPECT_NE(model.response(moved), base) << j;
    } else {
      EXPECT_EQ(model.response(moved), base) << j;
    }
  }
}

TEST(ColumnNonlinear, GroupsAttachWhenRequested) {
  auto spec = column_spec();
  spec.n_groups = 4;
  const auto data = generate_synthetic(spec);
  ASSERT_EQ(data.groups.size(), data.rows());
  for (auto g : data.groups) {
    EXPECT_GE(g, 0);
    EXPECT_LT(g, 4);
  }
}

}  // namespace
}  // namespace pcm
