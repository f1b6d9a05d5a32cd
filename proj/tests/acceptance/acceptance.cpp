// Acceptance gate. One line per criterion:
//   criterion N <name>: PASS|FAIL  <measurements>
// Run all criteria, or one with --criterion N. Exit status is 0 only if
// every selected criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pcm/cli/commands.hpp"
#include "pcm/cli/manifest.hpp"
#include "pcm/dataset.hpp"
#include "pcm/drivers.hpp"
#include "pcm/error.hpp"
#include "pcm/mask.hpp"
#include "pcm/metrics.hpp"
#include "pcm/network.hpp"
#include "pcm/protocol.hpp"
#include "pcm/rng.hpp"
#include "pcm/shapley.hpp"
#include "pcm/synthetic.hpp"
#include "support.hpp"

namespace pcm::acceptance {
namespace {

namespace fs = std::filesystem;

// Pinned tolerances.
namespace tol {
constexpr std::size_t kGradNetworks = 24;
constexpr double kGradRelative = 1e-4;
constexpr double kGradSeconds = 60.0;

constexpr double kPremaskParams = 0.56e6;
constexpr double kMaskParams = 0.55e6;
constexpr double kParamRelative = 0.02;

constexpr std::size_t kRecoverySeeds = 10;
constexpr std::size_t kRecoveryRequired = 9;
constexpr std::size_t kRecoveryTrainRows = 50000;
constexpr double kRecoverySeconds = 600.0;

constexpr std::size_t kRetentionSeeds = 5;
constexpr double kRetentionGap = 0.05;

constexpr double kMaskNonDriverShare = 0.01;
constexpr double kBaselineNonDriverShare = 0.10;

constexpr std::size_t kShapleyTrials = 20;
constexpr std::size_t kShapleyDims = 6;
constexpr double kShapleyStdErrors = 3.0;
constexpr double kShapleyCoverage = 0.95;
constexpr double kEfficiencyResidual = 1e-9;

constexpr double kShiftRawJaccard = 0.3;
constexpr double kShiftTranslatedJaccard = 0.7;

constexpr double kScalerRoundTrip = 1e-12;
constexpr double kInvariantSeconds = 120.0;
}  // namespace tol

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

std::string index_list(const std::vector<std::size_t>& idx) {
  std::string out = "{";
  for (std::size_t i = 0; i < idx.size(); ++i) out += (i ? "," : "") + std::to_string(idx[i]);
  return out + "}";
}

// ---------------------------------------------------------------------------
// Shared pipeline

struct Scaled {
  Dataset train;
  Dataset val;
  Dataset test;
  std::vector<std::size_t> truth;
};

Scaled prepare(const SyntheticSpec& spec) {
  const auto raw = generate_synthetic(spec);
  auto parts = shuffle_and_split(raw, {0.6, 0.2, 0.2}, spec.seed);
  const auto stats = fit_scaler(parts.train);
  return {apply_scaler(stats, parts.train), apply_scaler(stats, parts.val), apply_scaler(stats, parts.test),
          raw.truth_drivers.value_or(std::vector<std::size_t>{})};
}

struct PipelineRun {
  SweepResult sweep;
  Selection selection;
  Network network;
  BinaryMask mask;
};

PipelineRun run_pipeline(const Scaled& data, const TrainingConfig& cfg) {
  const auto pre = train_premask(data.train, cfg, &data.val);
  PipelineRun run;
  run.sweep = sweep_thresholds(pre.network, data.train, cfg, &data.val);
  run.selection = select_best(run.sweep);
  run.network = *run.selection.network;
  run.mask = run.sweep.records[run.selection.index].mask;
  return run;
}

// Same architecture, epochs, batches and schedule, but no L1 pressure and
// no gating: lambda 0 for the first phase, all inputs kept in the second.
Network train_baseline(const Scaled& data, TrainingConfig cfg) {
  cfg.lambda = 0.0;
  const auto pre = train_premask(data.train, cfg, &data.val);
  return train_mask(pre.network, BinaryMask::all_ones(data.train.dims()), data.train, cfg, &data.val).network;
}

double test_r2(const Network& net, const Dataset& test) {
  return r2(predict(net, test.inputs), test.targets).r2.value_or(std::nan(""));
}

// Desk-scale setting for the column benchmark, calibrated once so that the
// selected mask usually equals the driver set.
SyntheticSpec column_spec(std::uint64_t seed, int shift) {
  SyntheticSpec s;
  s.mechanism = Mechanism::kColumnNonlinear;
  s.d = 36;
  s.n_samples = 30000;
  s.shift = shift;
  s.seed = seed;
  return s;
}

TrainingConfig column_config(std::uint64_t seed) {
  TrainingConfig c;
  c.lambda = 10.0;
  c.hidden_widths = {64, 64};
  c.train_batch = 64;
  c.seed = seed;
  return c;
}

// ---------------------------------------------------------------------------
// 1. Gradient oracle

Outcome gradient_oracle() {
  const auto start = Clock::now();
  std::size_t checked = 0, skipped = 0, failures = 0, networks = 0;
  double worst = 0.0;
  for (std::size_t k = 0; k < tol::kGradNetworks; ++k) {
    const std::size_t d = 2 + k % 7;
    const std::vector<std::size_t> widths =
        k % 3 == 0 ? std::vector<std::size_t>{8} : std::vector<std::size_t>{3 + k % 6, 2 + k % 7};
    const Mode mode = k % 2 ? Mode::kMask : Mode::kPreMask;
    // The penalty acts on the input kernel, so lambda alternates on pre-mask networks only.
    const double lambda = mode == Mode::kPreMask && (k / 2) % 2 ? 0.01 : 0.0;
    const auto net = testing::random_network(d, widths, mode, 1000 + k);
    const Matrix x = testing::random_matrix(6, d, 2000 + k);
    const Vector y = testing::random_vector(6, 3000 + k);
    const auto g = testing::check_gradients(net, x, y, lambda, 1e-5, tol::kGradRelative);
    checked += g.checked;
    skipped += g.skipped;
    failures += g.failures;
    worst = std::max(worst, g.max_relative_error);
    ++networks;
  }
  const double elapsed = seconds_since(start);
  const bool pass = failures == 0 && networks >= 20 && elapsed < tol::kGradSeconds;
  return {pass, std::to_string(networks) + " networks, " + std::to_string(checked) + " parameters checked, " +
                    std::to_string(skipped) + " at the L1 kink skipped, " + std::to_string(failures) +
                    " failures, max rel err " + fmt(worst, 3) + " (tol " + fmt(tol::kGradRelative) + "), " +
                    fmt(elapsed, 3) + " s"};
}

// ---------------------------------------------------------------------------
// 2. Parameter counts

Outcome parameter_counts() {
  const TrainingConfig defaults;
  const auto arch = defaults.architecture(94);
  const auto pre = make_premask_network(arch, 42).parameter_count();
  const auto masked = make_mask_network(arch, BinaryMask::all_ones(94), 42).parameter_count();
  const double e_pre = std::abs(double(pre) - tol::kPremaskParams) / tol::kPremaskParams;
  const double e_mask = std::abs(double(masked) - tol::kMaskParams) / tol::kMaskParams;
  const bool pass = e_pre <= tol::kParamRelative && e_mask <= tol::kParamRelative;
  return {pass, "pre-mask " + std::to_string(pre) + " (" + fmt(100 * e_pre, 3) + "% off 0.56M), mask " +
                    std::to_string(masked) + " (" + fmt(100 * e_mask, 3) + "% off 0.55M), tol 2%"};
}

// ---------------------------------------------------------------------------
// 3. Driver recovery on SparseLinear with the default hyper-parameters

Outcome driver_recovery_check() {
  const auto start = Clock::now();
  std::size_t exact = 0;
  std::ostringstream per_seed;
  for (std::size_t k = 0; k < tol::kRecoverySeeds; ++k) {
    SyntheticSpec spec;
    spec.mechanism = Mechanism::kSparseLinear;
    spec.d = 20;
    spec.driver_set = {3, 8, 12, 17};
    spec.spurious_corr = 0.8;
    spec.noise_std = 0.1;
    spec.n_samples = 83334;  // 60% train share -> 50k rows
    spec.seed = 100 + k;
    const auto data = prepare(spec);
    if (data.train.rows() < tol::kRecoveryTrainRows) {
      return {false, "train split has only " + std::to_string(data.train.rows()) + " rows"};
    }
    TrainingConfig cfg;  // lambda 0.001, 9 + 9 epochs, 20 thresholds, batch 1024
    cfg.hidden_widths = {64, 64};
    cfg.seed = spec.seed;
    const auto run = run_pipeline(data, cfg);
    const auto rec = driver_recovery(run.mask, data.truth);
    exact += rec.exact();
    per_seed << ' ' << run.mask.selected_count() << '/' << fmt(rec.precision.value_or(0.0), 3);
  }
  const double elapsed = seconds_since(start);
  const bool pass = exact >= tol::kRecoveryRequired && elapsed < tol::kRecoverySeconds;
  return {pass, "exact recovery in " + std::to_string(exact) + "/" + std::to_string(tol::kRecoverySeeds) +
                    " seeds (need " + std::to_string(tol::kRecoveryRequired) +
                    "); selected/precision per seed:" + per_seed.str() + "; " + fmt(elapsed, 4) + " s"};
}

// ---------------------------------------------------------------------------
// 4. Performance retention

Outcome performance_retention() {
  bool pass = true;
  std::ostringstream detail;
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < tol::kRetentionSeeds; ++k) {
    const std::uint64_t seed = 42 + k;
    const auto data = prepare(column_spec(seed, 0));
    const auto cfg = column_config(seed);
    const auto run = run_pipeline(data, cfg);
    const double masked = test_r2(run.network, data.test);
    const double base = test_r2(train_baseline(data, cfg), data.test);
    const double gap = base - masked;
    worst = std::max(worst, gap);
    pass = pass && std::isfinite(gap) && gap <= tol::kRetentionGap;
    detail << " seed " << seed << ": mask " << fmt(masked) << " (" << run.mask.selected_count() << " inputs) vs base "
           << fmt(base) << ";";
  }
  return {pass, "largest R2 shortfall (base - mask) " + fmt(worst, 3) + " (tol " + fmt(tol::kRetentionGap) + ");" + detail.str()};
}

// ---------------------------------------------------------------------------
// 5. Spurious-link removal

double non_driver_share(const Vector& mass, const std::vector<std::size_t>& drivers) {
  std::vector<bool> is_driver(static_cast<std::size_t>(mass.size()), false);
  for (auto j : drivers) is_driver[j] = true;
  double off = 0.0;
  for (Index j = 0; j < mass.size(); ++j) off += is_driver[std::size_t(j)] ? 0.0 : mass[j];
  return off / mass.sum();
}

Outcome spurious_link_removal() {
  const std::uint64_t seed = 42;
  const auto data = prepare(column_spec(seed, 0));
  const auto cfg = column_config(seed);
  const auto run = run_pipeline(data, cfg);
  const auto baseline = train_baseline(data, cfg);
  const Matrix samples = draw_rows(data.test, 200, seed);
  const Matrix background = draw_rows(data.train, 100, seed);
  AttributionOptions o;
  o.permutations = 32;
  o.seed = seed;
  const Vector masked = mean_abs_attribution(as_predictor(run.network), samples, background, o);
  const Vector base = mean_abs_attribution(as_predictor(baseline), samples, background, o);
  bool masked_zero = true;
  for (std::size_t j = 0; j < run.mask.size(); ++j) {
    if (!run.mask.bits[j] && masked[Index(j)] != 0.0) masked_zero = false;
  }
  const double s_mask = non_driver_share(masked, data.truth);
  const double s_base = non_driver_share(base, data.truth);
  const bool pass = masked_zero && s_mask < tol::kMaskNonDriverShare && s_base > tol::kBaselineNonDriverShare;
  return {pass, "non-driver share: mask " + fmt(100 * s_mask, 3) + "% (need < 1%, " +
                    std::to_string(run.mask.selected_count()) + " inputs kept, masked inputs " +
                    (masked_zero ? "exactly 0" : "NONZERO") + "), baseline " + fmt(100 * s_base, 3) +
                    "% (need > 10%)"};
}

// ---------------------------------------------------------------------------
// 6. Shapley oracle equivalence

Outcome shapley_equivalence() {
  std::size_t inside = 0, total = 0;
  double worst_residual = 0.0;
  for (std::size_t trial = 0; trial < tol::kShapleyTrials; ++trial) {
    const auto net = testing::random_network(tol::kShapleyDims, {8, 8}, Mode::kPreMask, 500 + trial);
    const auto f = as_predictor(net);
    const Vector x = testing::random_vector(tol::kShapleyDims, 600 + trial);
    const Matrix bg = testing::random_matrix(50, tol::kShapleyDims, 700 + trial);
    const std::span<const double> xs(x.data(), tol::kShapleyDims);
    const Vector exact = shapley_exact(f, xs, bg);
    worst_residual = std::max(worst_residual, std::abs(exact.sum() - (f(x.transpose())[0] - f(bg).mean())));
    const auto est = shapley_sampled(f, xs, bg, 500, trial);
    for (Index j = 0; j < exact.size(); ++j) {
      ++total;
      inside += std::abs(est.values[j] - exact[j]) <= tol::kShapleyStdErrors * est.standard_error[j];
    }
  }
  const double coverage = double(inside) / double(total);
  const bool pass = coverage >= tol::kShapleyCoverage && worst_residual < tol::kEfficiencyResidual;
  return {pass, std::to_string(inside) + "/" + std::to_string(total) + " pairs within 3 SE (" +
                    fmt(100 * coverage, 4) + "%, need 95%), max efficiency residual " + fmt(worst_residual, 3) +
                    " (need < 1e-9)"};
}

// ---------------------------------------------------------------------------
// 7. Shift tracking

Outcome shift_tracking() {
  const std::uint64_t seed = 42;
  const int shift = 2;
  const auto base_data = prepare(column_spec(seed, 0));
  const auto shifted_data = prepare(column_spec(seed, shift));
  const auto cfg = column_config(seed);
  const auto base = run_pipeline(base_data, cfg).mask;
  const auto shifted = run_pipeline(shifted_data, cfg).mask;
  const std::size_t levels = column_spec(seed, 0).column.levels;
  const auto raw = compare_masks(base, shifted);
  const auto back = compare_masks(base, translate_levels(shifted, levels, -shift));
  const double j_raw = raw.jaccard.value_or(1.0);
  const double j_back = back.jaccard.value_or(0.0);
  const bool pass = j_raw < tol::kShiftRawJaccard && j_back > tol::kShiftTranslatedJaccard;
  return {pass, "Jaccard raw " + fmt(j_raw, 3) + " (need < 0.3), translated back " + fmt(j_back, 3) +
                    " (need > 0.7); base " + index_list(base.selected_indices()) + ", shifted " +
                    index_list(shifted.selected_indices())};
}

// ---------------------------------------------------------------------------
// 8. Protocol invariants

struct InvariantLog {
  std::vector<std::string> failed;
  std::size_t checks = 0;
  void expect(bool ok, const std::string& what) {
    ++checks;
    if (!ok && std::find(failed.begin(), failed.end(), what) == failed.end()) failed.push_back(what);
  }
};

MaskVector random_mask_vector(Rng& rng, std::size_t d) {
  std::uniform_real_distribution<double> u(0.0, 0.5);
  std::bernoulli_distribution tiny(0.3);
  MaskVector m;
  for (std::size_t j = 0; j < d; ++j) m.values.push_back(tiny(rng) ? u(rng) * 1e-3 : u(rng));
  return m;
}

void grid_and_mask_properties(InvariantLog& log) {
  Rng rng(8);
  for (int trial = 0; trial < 300; ++trial) {
    const auto m = random_mask_vector(rng, 3 + rng() % 60);
    ThresholdGrid g;
    try {
      g = build_threshold_grid(m, 1 + rng() % 30);
    } catch (const DegenerateGridError&) {
      continue;
    }
    std::size_t prev_count = m.size() + 1;
    BinaryMask prev = BinaryMask::all_ones(m.size());
    for (std::size_t i = 0; i < g.thresholds.size(); ++i) {
      const double t = g.thresholds[i];
      log.expect(t >= kGridLowerBound && t < g.p70, "grid membership in [1e-4, p70)");
      log.expect(t == round_to_decimals(t, 4), "grid 4-decimal rounding");
      if (i) log.expect(t > g.thresholds[i - 1], "grid strictly increasing");
      const auto mask = binarize(m, t);
      log.expect(mask.selected_count() <= prev_count, "threshold monotonicity (count)");
      for (std::size_t j = 0; j < m.size(); ++j) {
        log.expect(!mask.bits[j] || prev.bits[j], "threshold monotonicity (nesting)");
        log.expect(bool(mask.bits[j]) == (m.values[j] >= t), "binarization uses >=");
      }
      prev_count = mask.selected_count();
      prev = mask;
    }
    // A value exactly at the threshold is kept.
    const double t = m.values[rng() % m.size()];
    const auto at = binarize(m, t);
    for (std::size_t j = 0; j < m.size(); ++j) {
      if (m.values[j] == t) log.expect(at.bits[j] == 1, "binarization boundary keeps value == t");
    }
  }
}

void forward_invariance(InvariantLog& log) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto net = testing::random_network(3 + seed % 6, {6, 5}, Mode::kMask, seed);
    const auto d = net.input_dim();
    Matrix x = testing::random_matrix(20, d, seed + 100);
    const Vector before = predict(net, x);
    Matrix y = x;
    const Matrix noise = testing::random_matrix(20, d, seed + 200, 1e3);
    for (std::size_t j = 0; j < d; ++j) {
      if (!net.mask->bits[j]) y.col(Index(j)) = noise.col(Index(j));
    }
    log.expect(predict(net, y) == before, "mask forward invariance (bit-exact)");
  }
}

void split_and_scaler(InvariantLog& log) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t n = 50 + seed * 37;
    Dataset raw;
    raw.schema = DatasetSchema::generic(3);
    raw.inputs = testing::random_matrix(n, 3, seed, 5.0);
    raw.inputs.col(0) = Vector::LinSpaced(Index(n), 0.0, double(n - 1));  // row id
    raw.targets = testing::random_vector(n, seed + 1);
    const auto parts = shuffle_and_split(raw, {0.6, 0.2, 0.2}, seed);
    std::multiset<long> ids;
    for (const Dataset* part : {&parts.train, &parts.val, &parts.test}) {
      for (Index r = 0; r < part->inputs.rows(); ++r) ids.insert(std::lround(part->inputs(r, 0)));
    }
    log.expect(ids.size() == n && std::set<long>(ids.begin(), ids.end()).size() == n &&
                   *ids.begin() == 0 && *ids.rbegin() == long(n - 1),
               "split disjoint and exhaustive");

    const auto stats = fit_scaler(parts.train);
    for (const Dataset* part : {&parts.train, &parts.val, &parts.test}) {
      const auto back = invert_scaler(stats, apply_scaler(stats, *part));
      const double scale_x = std::max(1.0, part->inputs.cwiseAbs().maxCoeff());
      const double scale_y = std::max(1.0, part->targets.cwiseAbs().maxCoeff());
      log.expect((back.inputs - part->inputs).cwiseAbs().maxCoeff() <= tol::kScalerRoundTrip * scale_x &&
                     (back.targets - part->targets).cwiseAbs().maxCoeff() <= tol::kScalerRoundTrip * scale_y,
                 "scaler round trip <= 1e-12");
    }
  }
}

std::vector<cli::Artifact> run_cli_train(const fs::path& dir, const fs::path& config,
                                         const std::vector<std::string>& extra) {
  std::vector<std::string> args{"train", config.string(), "-o", dir.string()};
  args.insert(args.end(), extra.begin(), extra.end());
  std::ostringstream out, err;
  if (cli::run_cli(args, out, err) != 0) throw std::runtime_error("pcmask train failed: " + err.str());
  return cli::load_manifest(dir / cli::kManifestName).artifacts;
}

void end_to_end_determinism(InvariantLog& log) {
  const auto dir = testing::fresh_dir("acceptance_determinism");
  std::ofstream(dir / "run.ini") << "[synthetic]\nmechanism = column_nonlinear\nd = 36\nn_samples = 3000\nseed = 5\n"
                                    "[training]\nlambda = 10\nepochs_premask = 2\nepochs_mask = 2\n"
                                    "train_batch = 64\nhidden = 16,16\nn_thresholds = 5\n";
  const auto a = run_cli_train(dir / "a", dir / "run.ini", {});
  const auto b = run_cli_train(dir / "b", dir / "run.ini", {});
  const auto c = run_cli_train(dir / "c", dir / "run.ini", {"--jobs", "2"});
  log.expect(!a.empty() && a.size() == b.size() && a.size() == c.size(), "run determinism (artifact set)");
  for (std::size_t i = 0; i < std::min({a.size(), b.size(), c.size()}); ++i) {
    log.expect(a[i].path == b[i].path && a[i].sha256 == b[i].sha256, "run determinism (identical checksums)");
    log.expect(a[i].path == c[i].path && a[i].sha256 == c[i].sha256, "run determinism across --jobs");
  }
}

Outcome protocol_invariants() {
  const auto start = Clock::now();
  InvariantLog log;
  grid_and_mask_properties(log);
  forward_invariance(log);
  split_and_scaler(log);
  end_to_end_determinism(log);
  const double elapsed = seconds_since(start);
  std::string detail = std::to_string(log.checks) + " checks, " + fmt(elapsed, 3) + " s";
  for (const auto& f : log.failed) detail += "; violated: " + f;
  return {log.failed.empty() && elapsed < tol::kInvariantSeconds, detail};
}

// ---------------------------------------------------------------------------

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {1, "gradient-oracle", gradient_oracle},
      {2, "parameter-count", parameter_counts},
      {3, "driver-recovery", driver_recovery_check},
      {4, "performance-retention", performance_retention},
      {5, "spurious-link-removal", spurious_link_removal},
      {6, "shapley-equivalence", shapley_equivalence},
      {7, "shift-tracking", shift_tracking},
      {8, "protocol-invariants", protocol_invariants},
  };
  return all;
}

int main_impl(int argc, char** argv) {
  CLI::App app{"acceptance gate"};
  std::vector<int> selected;
  app.add_option("-c,--criterion", selected, "criterion number(s) to run (default: all)")->check(CLI::Range(1, 8));
  CLI11_PARSE(app, argc, argv);

  bool all_pass = true;
  for (const auto& c : criteria()) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    all_pass = all_pass && o.pass;
    std::cout << "criterion " << c.id << ' ' << c.name << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail
              << std::endl;
  }
  return all_pass ? 0 : 1;
}

}  // namespace
}  // namespace pcm::acceptance

int main(int argc, char** argv) { return pcm::acceptance::main_impl(argc, argv); }
