#include "pcm/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "pcm/checkpoint.hpp"
#include "pcm/cli/checksum.hpp"
#include "pcm/cli/manifest.hpp"
#include "pcm/cli/run_config.hpp"
#include "pcm/drivers.hpp"
#include "pcm/error.hpp"
#include "pcm/metrics.hpp"
#include "pcm/protocol.hpp"
#include "pcm/reports.hpp"
#include "pcm/rng.hpp"
#include "pcm/shapley.hpp"
#include "pcm/synthetic.hpp"
#include "pcm/text.hpp"

#ifndef PCM_VERSION
#define PCM_VERSION "0.0.0"
#endif

namespace pcm::cli {
namespace {

namespace fs = std::filesystem;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

Json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string sweep_checkpoint_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "sweep/mask_%02zu.ckpt", i);
  return buf;
}

std::string index_list(const std::vector<std::size_t>& idx) {
  std::vector<std::string> parts;
  for (auto i : idx) parts.push_back(std::to_string(i));
  return parts.empty() ? "(none)" : join(parts, " ");
}

std::string optional_real(const std::optional<double>& v) {
  return v ? format_real(*v) : "undefined";
}

void check_inputs(const Network& net, const Dataset& data) {
  if (net.input_dim() != data.dims()) {
    throw ShapeError("checkpoint expects " + std::to_string(net.input_dim()) +
                     " inputs, dataset has " + std::to_string(data.dims()));
  }
}

// Scales `data` unless it already carries applied statistics. The scaler
// comes from --scaler, else scaler.json beside the checkpoint.
Dataset prepare_for_model(Dataset data, const std::string& scaler_flag, const fs::path& checkpoint,
                          std::ostream& err) {
  if (data.scaler) return data;
  fs::path path = scaler_flag;
  if (path.empty()) path = checkpoint.parent_path() / "scaler.json";
  if (fs::exists(path)) return apply_scaler(load_scaler_json(path), data);
  if (!scaler_flag.empty()) throw IoError("scaler file not found: " + scaler_flag);
  err << "pcmask: warning: no scaler found; using the dataset values as given\n";
  return data;
}

std::optional<DatasetSchema> optional_schema(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return load_schema(path);
}

// ---------------------------------------------------------------- train

struct TrainData {
  Dataset train;
  Dataset val;
  Dataset test;
  std::optional<std::vector<std::size_t>> truth;
  ScalerStats scaler;
};

class TrainRun {
 public:
  TrainRun(RunConfig cfg, bool resume, std::string stop_after, std::ostream& log)
      : cfg_(std::move(cfg)), root_(cfg_.output_dir), resume_(resume),
        stop_after_(std::move(stop_after)), log_(log) {}

  void execute() {
    const auto manifest_path = root_ / kManifestName;
    const std::string snapshot = to_ini(cfg_);
    if (resume_) {
      if (!fs::exists(manifest_path)) throw UsageError("--resume: no manifest in " + root_.string());
      manifest_ = load_manifest(manifest_path);
      if (manifest_.config != snapshot) {
        throw ValidationError("resume", "configuration differs from the one recorded in the manifest");
      }
    } else {
      manifest_ = RunManifest{};
      manifest_.config = snapshot;
    }
    manifest_.version = tool_version();
    manifest_.command = "train";
    manifest_.seed = cfg_.training.seed;
    manifest_.started_at = utc_timestamp();
    manifest_.finished_at.clear();
    for (const auto& name : train_stages()) manifest_.stage(name);
    save();

    const bool done =
        stage("data", [&] { load_data(true); }, [&] { load_data(false); }) &&
        stage("premask", [&] { run_premask(); }, [&] {
          premask_ = load_checkpoint(root_ / "premask.ckpt").network;
        }) &&
        stage("mask_vector", [&] { run_mask_vector(); }, [&] { m_ = extract_mask_vector(*premask_); }) &&
        stage("grid", [&] { run_grid(); }, [&] { grid_ = build_threshold_grid(m_, cfg_.training.n_thresholds); }) &&
        stage("sweep", [&] { run_sweep(); }, [&] { restore_sweep(); }) &&
        stage("select", [&] { run_select(); }, [&] {
          best_ = load_checkpoint(root_ / "best.ckpt").network;
        }) &&
        stage("report", [&] { run_report(); }, [] {});
    (void)done;
    manifest_.finished_at = utc_timestamp();
    save();
  }

 private:
  // Runs or restores one stage. Once any stage runs, every later stage
  // runs too, so nothing downstream of fresh output is reused.
  bool stage(const std::string& name, const std::function<void()>& run,
             const std::function<void()>& restore) {
    if (resume_ && manifest_.stage_intact(root_, name)) {
      restore();
      log_ << "[" << name << "] intact, skipped\n";
    } else {
      resume_ = false;
      auto* rec = &manifest_.stage(name);
      rec->status = StageStatus::kRunning;
      rec->started_at = utc_timestamp();
      rec->finished_at.clear();
      rec->message.reset();
      rec->artifacts.clear();
      save();
      log_ << "[" << name << "] running\n";
      try {
        run();
      } catch (const Error& e) {
        rec = &manifest_.stage(name);
        rec->status = StageStatus::kFailed;
        rec->message = e.what();
        rec->finished_at = utc_timestamp();
        manifest_.finished_at = utc_timestamp();
        save();
        throw;
      }
      rec = &manifest_.stage(name);
      rec->status = StageStatus::kCompleted;
      rec->finished_at = utc_timestamp();
      save();
    }
    if (name == stop_after_) {
      log_ << "stopped after stage " << name << '\n';
      return false;
    }
    return true;
  }

  void save() const { save_manifest(root_ / kManifestName, manifest_); }

  void artifact(const std::string& stage_name, const std::string& rel) {
    manifest_.add_artifact(root_, stage_name, rel, root_ / rel);
  }

  void load_data(bool write) {
    Dataset train, val, test;
    if (cfg_.synthetic) {
      const auto raw = generate_synthetic(*cfg_.synthetic);
      auto parts = shuffle_and_split(raw, cfg_.split.fractions, cfg_.split.seed.value_or(cfg_.synthetic->seed));
      train = std::move(parts.train);
      val = std::move(parts.val);
      test = std::move(parts.test);
      if (write) {
        fs::create_directories(root_ / "data");
        save_binary(root_ / "data/train.bin", train);
        save_binary(root_ / "data/val.bin", val);
        save_binary(root_ / "data/test.bin", test);
        save_schema(root_ / "data/schema.ini", train.schema);
        for (const auto* rel : {"data/train.bin", "data/val.bin", "data/test.bin", "data/schema.ini"}) {
          artifact("data", rel);
        }
        if (train.truth_drivers) {
          save_truth_file(root_ / "data/truth.txt", *train.truth_drivers);
          artifact("data", "data/truth.txt");
        }
      }
    } else {
      const auto schema = cfg_.schema_path ? std::optional(load_schema(*cfg_.schema_path)) : std::nullopt;
      train = load_dataset(*cfg_.train_path, schema);
      if (cfg_.val_path) val = load_dataset(*cfg_.val_path, schema);
      if (cfg_.test_path) test = load_dataset(*cfg_.test_path, schema);
    }
    data_.truth = train.truth_drivers;
    data_.scaler = train.scaler ? *train.scaler : fit_scaler(train);
    const std::size_t d_train = train.dims();
    auto scaled = [&](Dataset d) {
      if (d.rows() == 0 || d.scaler) return d;
      if (d.dims() != d_train) {
        throw ShapeError("split has " + std::to_string(d.dims()) + " inputs, train has " +
                         std::to_string(d_train));
      }
      return apply_scaler(data_.scaler, d);
    };
    data_.train = scaled(std::move(train));
    data_.val = scaled(std::move(val));
    data_.test = scaled(std::move(test));
    if (data_.train.rows() == 0) throw ValidationError("data.train", "training split is empty");
    if (write) {
      save_scaler_json(root_ / "scaler.json", data_.scaler);
      artifact("data", "scaler.json");
    }
    log_ << "  train " << data_.train.rows() << " rows, val " << data_.val.rows() << ", test "
         << data_.test.rows() << ", d = " << data_.train.dims() << '\n';
  }

  const Dataset* validation() const { return data_.val.rows() ? &data_.val : nullptr; }

  void run_premask() {
    auto trained = train_premask(data_.train, cfg_.training, validation());
    for (const auto& e : trained.history.epochs) {
      log_ << "  epoch " << e.epoch << " lr " << format_real(e.lr) << " loss " << format_real(e.train.total)
           << '\n';
    }
    premask_ = std::move(trained.network);
    save_checkpoint(root_ / "premask.ckpt", *premask_, cfg_.training.seed);
    save_history_csv(root_ / "premask_history.csv", trained.history);
    artifact("premask", "premask.ckpt");
    artifact("premask", "premask_history.csv");
  }

  void run_mask_vector() {
    m_ = extract_mask_vector(*premask_);
    std::ostringstream out;
    out << "index,name,norm\n";
    const auto& names = data_.train.schema.input_names;
    for (std::size_t j = 0; j < m_.size(); ++j) out << j << ',' << names.at(j) << ',' << format_real(m_.values[j]) << '\n';
    write_text(root_ / "mask_vector.csv", out.str());
    artifact("mask_vector", "mask_vector.csv");
  }

  void run_grid() {
    grid_ = build_threshold_grid(m_, cfg_.training.n_thresholds);
    save_json(root_ / "grid.json",
              Json{{"p70", grid_.p70}, {"requested", grid_.requested}, {"thresholds", grid_.thresholds}});
    artifact("grid", "grid.json");
    log_ << "  " << grid_.thresholds.size() << " thresholds below p70 = " << format_real(grid_.p70) << '\n';
  }

  void run_sweep() {
    sweep_ = sweep_thresholds(*premask_, m_, grid_, data_.train, cfg_.training, validation());
    fs::create_directories(root_ / "sweep");
    save_sweep_csv(root_ / "sweep.csv", sweep_);
    artifact("sweep", "sweep.csv");
    for (std::size_t i = 0; i < sweep_.records.size(); ++i) {
      const auto& rec = sweep_.records[i];
      log_ << "  t = " << format_fixed(rec.threshold) << "  inputs " << rec.selected_count << "  loss "
           << (rec.error ? "failed: " + *rec.error : format_real(rec.final_train_loss)) << '\n';
      if (rec.error) continue;
      save_checkpoint(root_ / sweep_checkpoint_name(i), rec.network, cfg_.training.seed);
      artifact("sweep", sweep_checkpoint_name(i));
    }
  }

  void restore_sweep() {
    sweep_ = SweepResult{m_, grid_, {}};
    std::ifstream in(root_ / "sweep.csv");
    std::string line;
    std::getline(in, line);  // header
    for (std::size_t i = 0; std::getline(in, line); ++i) {
      // threshold,selected_count,final_train_loss,final_val_loss,bits,error
      std::vector<std::string> f;
      std::size_t pos = 0;
      for (int k = 0; k < 5; ++k) {
        const auto comma = line.find(',', pos);
        if (comma == std::string::npos) throw ParseError("sweep.csv: too few fields", i + 2);
        f.push_back(line.substr(pos, comma - pos));
        pos = comma + 1;
      }
      f.push_back(line.substr(pos));
      SweepRecord rec;
      rec.threshold = parse_real(f[0], i + 2);
      rec.selected_count = parse_count(f[1], i + 2);
      rec.final_train_loss = f[2] == "nan" ? std::nan("") : parse_real(f[2], i + 2);
      if (!f[3].empty()) rec.final_val_loss = parse_real(f[3], i + 2);
      rec.mask.threshold = rec.threshold;
      for (char c : f[4]) rec.mask.bits.push_back(c == '1' ? 1 : 0);
      if (!f[5].empty()) {
        std::string msg = f[5];
        if (msg.size() >= 2 && msg.front() == '"' && msg.back() == '"') msg = msg.substr(1, msg.size() - 2);
        rec.error = msg;
      } else {
        rec.network = load_checkpoint(root_ / sweep_checkpoint_name(i)).network;
      }
      sweep_.records.push_back(std::move(rec));
    }
  }

  void run_select() {
    const auto sel = select_best(sweep_);
    const auto& rec = sweep_.records[sel.index];
    best_ = *sel.network;
    save_checkpoint(root_ / "best.ckpt", *best_, cfg_.training.seed);
    save_mask_file(root_ / "best_mask.txt", m_, rec.mask);
    Json j{{"index", sel.index},
           {"threshold", sel.threshold},
           {"selected_count", rec.selected_count},
           {"selected", rec.mask.selected_indices()},
           {"final_train_loss", rec.final_train_loss},
           {"final_val_loss", rec.final_val_loss ? Json(*rec.final_val_loss) : Json(nullptr)}};
    save_json(root_ / "selection.json", j);
    for (const auto* rel : {"best.ckpt", "best_mask.txt", "selection.json"}) artifact("select", rel);
    log_ << "  selected t = " << format_fixed(sel.threshold) << " with " << rec.selected_count
         << " inputs: " << index_list(rec.mask.selected_indices()) << '\n';
  }

  void run_report() {
    Json report{{"threshold", best_->mask->threshold}, {"selected", best_->mask->selected_indices()}};
    Json skill = Json::object();
    const std::pair<const char*, const Dataset*> splits[] = {
        {"train", &data_.train}, {"val", &data_.val}, {"test", &data_.test}};
    for (const auto& [name, ds] : splits) {
      if (ds->rows() < 2) continue;
      const auto rep = r2(predict(*best_, ds->inputs, cfg_.training.eval_batch), ds->targets,
                          ds->schema.output_name);
      skill[name] = to_json(rep);
      log_ << "  " << name << " r2 " << optional_real(rep.r2) << " mse " << format_real(rep.mse) << '\n';
    }
    report["r2"] = skill;
    if (data_.truth) {
      const auto rec = driver_recovery(*best_->mask, *data_.truth);
      report["recovery"] = to_json(rec);
      log_ << "  precision " << optional_real(rec.precision) << " recall " << optional_real(rec.recall) << '\n';
    }
    const Dataset& eval = data_.test.rows() >= 2 ? data_.test : data_.train;
    if (!eval.groups.empty()) {
      const auto profile = profile_report(predict(*best_, eval.inputs, cfg_.training.eval_batch), eval.targets,
                                          eval.groups);
      if (cfg_.wants("csv")) {
        save_profile_csv(root_ / "profile.csv", profile);
        artifact("report", "profile.csv");
      }
      if (cfg_.wants("json")) report["profile"] = to_json(profile);
    }
    if (cfg_.wants("json")) {
      save_json(root_ / "report.json", report);
      artifact("report", "report.json");
    }
  }

  RunConfig cfg_;
  fs::path root_;
  bool resume_;
  std::string stop_after_;
  std::ostream& log_;
  RunManifest manifest_;

  TrainData data_;
  std::optional<Network> premask_;
  MaskVector m_;
  ThresholdGrid grid_;
  SweepResult sweep_;
  std::optional<Network> best_;
};

// ---------------------------------------------------------------- commands

struct TrainOverrides {
  std::string config;
  std::string output;
  bool resume = false;
  bool print_config = false;
  std::string stop_after;
  std::size_t jobs = 1;
  double lambda = 0.0;
  std::uint64_t seed = 0;
  std::size_t epochs_premask = 0;
  std::size_t epochs_mask = 0;
  std::size_t thresholds = 0;
  std::size_t batch = 0;
  std::size_t eval_batch = 0;
  std::string hidden;
  double negative_slope = 0.0;
  double lr = 0.0;
};

void add_train_options(CLI::App& cmd, TrainOverrides& o) {
  cmd.add_option("config", o.config, "run configuration file");
  cmd.add_option("-o,--output", o.output, "run directory (overrides [output] dir)");
  cmd.add_flag("--resume", o.resume, "continue from the last intact stage in the manifest");
  cmd.add_flag("--print-config", o.print_config, "print the effective configuration and exit");
  cmd.add_option("--stop-after", o.stop_after, "stop after the named stage")
      ->check(CLI::IsMember(train_stages()));
  cmd.add_option("--jobs", o.jobs, "worker threads for the threshold sweep")->check(CLI::PositiveNumber);
  cmd.add_option("--lambda", o.lambda, "L1 penalty weight for the input kernel");
  cmd.add_option("--seed", o.seed, "training seed");
  cmd.add_option("--epochs-premask", o.epochs_premask);
  cmd.add_option("--epochs-mask", o.epochs_mask);
  cmd.add_option("--thresholds", o.thresholds, "threshold grid size");
  cmd.add_option("--batch", o.batch, "training batch size");
  cmd.add_option("--eval-batch", o.eval_batch, "evaluation batch size");
  cmd.add_option("--hidden", o.hidden, "hidden widths, e.g. 256x9 or 64,64");
  cmd.add_option("--negative-slope", o.negative_slope, "Leaky ReLU slope");
  cmd.add_option("--lr", o.lr, "initial learning rate");
}

RunConfig effective_config(const CLI::App& cmd, const TrainOverrides& o) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : load_run_config(o.config);
  if (cfg.output_dir.empty()) cfg.output_dir = default_output_root() / "pcmask-run";
  auto given = [&](const char* name) { return cmd.get_option(name)->count() > 0; };
  auto& t = cfg.training;
  if (given("--output")) cfg.output_dir = fs::absolute(o.output);
  if (given("--jobs")) t.jobs = o.jobs;
  if (given("--lambda")) t.lambda = o.lambda;
  if (given("--seed")) t.seed = o.seed;
  if (given("--epochs-premask")) t.epochs_premask = o.epochs_premask;
  if (given("--epochs-mask")) t.epochs_mask = o.epochs_mask;
  if (given("--thresholds")) t.n_thresholds = o.thresholds;
  if (given("--batch")) t.train_batch = o.batch;
  if (given("--eval-batch")) t.eval_batch = o.eval_batch;
  if (given("--hidden")) t.hidden_widths = parse_hidden(o.hidden);
  if (given("--negative-slope")) t.negative_slope = o.negative_slope;
  if (given("--lr")) t.lr_schedule.initial_lr = o.lr;
  return cfg;
}

int cmd_train(const CLI::App& cmd, const TrainOverrides& o, std::ostream& out) {
  RunConfig cfg = effective_config(cmd, o);
  if (o.print_config) {
    out << to_ini(cfg);
    return 0;
  }
  cfg.validate();
  TrainRun(cfg, o.resume, o.stop_after, out).execute();
  out << "run written to " << cfg.output_dir.string() << '\n';
  return 0;
}

struct GenDataOptions {
  std::string spec;
  std::string output;
  std::string format = "bin";
  std::uint64_t seed = 0;
};

int cmd_gen_data(const CLI::App& cmd, const GenDataOptions& o, std::ostream& out) {
  GenDataSpec spec = load_gen_data_spec(o.spec);
  if (cmd.get_option("--seed")->count() > 0) {
    spec.synthetic.seed = o.seed;
    spec.synthetic.validate();
  }
  const fs::path root = o.output.empty() ? default_output_root() / "data" : fs::path(o.output);
  fs::create_directories(root);
  RunManifest manifest;
  manifest.version = tool_version();
  manifest.command = "gen-data";
  manifest.config = to_ini(spec);
  manifest.seed = spec.synthetic.seed;
  manifest.started_at = utc_timestamp();
  auto& st = manifest.stage("generate");
  st.started_at = manifest.started_at;

  const auto raw = generate_synthetic(spec.synthetic);
  const auto parts = shuffle_and_split(raw, spec.split.fractions, spec.split.seed.value_or(spec.synthetic.seed));
  const std::string ext = o.format == "csv" ? ".csv" : ".bin";
  const std::pair<const char*, const Dataset*> files[] = {
      {"train", &parts.train}, {"val", &parts.val}, {"test", &parts.test}};
  for (const auto& [name, ds] : files) {
    const auto path = root / (std::string(name) + ext);
    if (o.format == "csv") {
      save_csv(path, *ds);
    } else {
      save_binary(path, *ds);
    }
    manifest.add_artifact(root, "generate", name, path);
    out << name << ": " << ds->rows() << " rows -> " << path.string() << '\n';
  }
  save_schema(root / "schema.ini", raw.schema);
  manifest.add_artifact(root, "generate", "schema", root / "schema.ini");
  save_truth_file(root / "truth.txt", raw.truth_drivers.value_or(std::vector<std::size_t>{}));
  manifest.add_artifact(root, "generate", "truth", root / "truth.txt");
  write_text(root / "spec.ini", manifest.config);
  manifest.add_artifact(root, "generate", "spec", root / "spec.ini");
  out << "truth drivers: " << index_list(raw.truth_drivers.value_or(std::vector<std::size_t>{})) << '\n';

  manifest.stage("generate").status = StageStatus::kCompleted;
  manifest.stage("generate").finished_at = manifest.finished_at = utc_timestamp();
  save_manifest(root / kManifestName, manifest);
  return 0;
}

struct EvalOptions {
  std::string checkpoint;
  std::string dataset;
  std::string schema;
  std::string scaler;
  std::string output;
  std::size_t eval_batch = 8192;
};

int cmd_evaluate(const EvalOptions& o, std::ostream& out, std::ostream& err) {
  const auto ckpt = load_checkpoint(o.checkpoint);
  auto data = load_dataset(o.dataset, optional_schema(o.schema));
  check_inputs(ckpt.network, data);
  data = prepare_for_model(std::move(data), o.scaler, o.checkpoint, err);
  const Vector pred = predict(ckpt.network, data.inputs, o.eval_batch);
  const auto report = r2(pred, data.targets, data.schema.output_name);
  const std::vector<std::int64_t> groups =
      data.groups.empty() ? std::vector<std::int64_t>(data.rows(), 0) : data.groups;
  const auto profile = profile_report(pred, data.targets, groups);

  const fs::path root = o.output.empty() ? default_output_root() : fs::path(o.output);
  fs::create_directories(root);
  save_json(root / "r2.json", to_json(report));
  save_json(root / "profile.json", to_json(profile));
  save_profile_csv(root / "profile.csv", profile);
  out << "r2 " << optional_real(report.r2) << "  mse " << format_real(report.mse) << "  n " << report.n << '\n';
  return 0;
}

struct AttributeOptions {
  std::string checkpoint;
  std::string dataset;
  std::string schema;
  std::string scaler;
  std::string output;
  std::size_t samples = kDefaultAttributionSamples;
  std::size_t background = kDefaultBackgroundRows;
  std::size_t permutations = 64;
  std::uint64_t seed = 42;
  std::size_t jobs = 1;
  bool exact = false;
  bool physical = false;
};

int cmd_attribute(const AttributeOptions& o, std::ostream& out, std::ostream& err) {
  const auto ckpt = load_checkpoint(o.checkpoint);
  auto data = load_dataset(o.dataset, optional_schema(o.schema));
  check_inputs(ckpt.network, data);
  data = prepare_for_model(std::move(data), o.scaler, o.checkpoint, err);

  AttributionOptions opts;
  opts.method = o.exact ? ShapleyMethod::kExact : ShapleyMethod::kSampled;
  opts.permutations = o.permutations;
  opts.seed = o.seed;
  opts.jobs = o.jobs;
  const Matrix samples = draw_rows(data, o.samples, derive_seed(o.seed, stream::kSamples));
  const Matrix background = draw_rows(data, o.background, o.seed);

  AttributionMatrix matrix;
  Vector row = mean_abs_attribution(as_predictor(ckpt.network), samples, background, opts);
  if (o.physical) {
    const double factor = data.scaler ? data.scaler->output_factor : data.schema.output_norm_constant;
    row /= factor;
  }
  matrix.values = row.transpose();
  matrix.output_names = {data.schema.output_name};
  matrix.input_names = data.schema.input_names;
  matrix.sample_count = static_cast<std::size_t>(samples.rows());
  matrix.baseline = "interventional; mean over " + std::to_string(background.rows()) +
                    " background rows (seed " + std::to_string(o.seed) + "); " +
                    (o.exact ? "exact enumeration" : std::to_string(o.permutations) + " permutations per sample");
  matrix.physical_units = o.physical;

  const fs::path root = o.output.empty() ? default_output_root() : fs::path(o.output);
  fs::create_directories(root);
  save_attribution_csv(root / "attribution.csv", matrix);
  save_json(root / "attribution.json", to_json(matrix));
  const double total = row.sum();
  out << "attribution over " << matrix.sample_count << " samples, total mass " << format_real(total) << '\n';
  return 0;
}

struct CompareOptions {
  std::string a;
  std::string b;
  std::size_t levels = 0;
  std::string grouping;
  int translate_b = 0;
  std::string csv;
  std::string json;
};

std::vector<std::int64_t> load_grouping(const fs::path& path, std::size_t d) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open grouping file " + path.string());
  std::vector<std::int64_t> groups;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (trim(line).empty()) continue;
    groups.push_back(parse_integer(trim(line), n));
  }
  if (groups.size() != d) {
    throw ShapeError("grouping has " + std::to_string(groups.size()) + " entries, masks have " +
                     std::to_string(d));
  }
  return groups;
}

int cmd_compare_masks(const CLI::App& cmd, const CompareOptions& o, std::ostream& out) {
  const auto a = load_mask_file(o.a).mask;
  auto b = load_mask_file(o.b).mask;
  if (a.size() != b.size()) {
    throw ShapeError("mask lengths differ: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  const bool has_levels = cmd.get_option("--levels")->count() > 0;
  if (has_levels && !o.grouping.empty()) throw UsageError("--levels and --grouping are exclusive");
  if (o.translate_b != 0 && !has_levels) throw UsageError("--translate-b needs --levels");
  if (has_levels && o.levels == 0) throw UsageError("--levels must be >= 1");
  if (o.translate_b != 0) b = translate_levels(b, o.levels, o.translate_b);

  std::optional<std::vector<std::int64_t>> grouping;
  if (has_levels) grouping = level_grouping(a.size(), o.levels);
  if (!o.grouping.empty()) grouping = load_grouping(o.grouping, a.size());
  const auto report = compare_masks(a, b, grouping ? &*grouping : nullptr);
  if (!o.csv.empty()) save_overlap_csv(o.csv, report);
  if (!o.json.empty()) save_json(o.json, to_json(report));
  out << "jaccard " << optional_real(report.jaccard) << "  only_a " << report.only_a << "  only_b "
      << report.only_b << "  both " << report.both << '\n';
  return 0;
}

std::string read_magic(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string magic(8, '\0');
  in.read(magic.data(), 8);
  magic.resize(static_cast<std::size_t>(in.gcount()));
  return magic;
}

int cmd_inspect(const std::string& file, std::ostream& out) {
  const fs::path path(file);
  const auto magic = read_magic(path);
  if (magic == std::string("PCMCKPT\0", 8)) {
    const auto ckpt = load_checkpoint(path);
    const auto& net = ckpt.network;
    const auto arch = architecture_of(net);
    out << "checkpoint " << path.string() << '\n'
        << "  mode        " << to_string(net.mode) << '\n'
        << "  inputs      " << net.input_dim() << '\n'
        << "  hidden      " << format_hidden(arch.hidden_widths) << '\n'
        << "  slope       " << format_real(arch.negative_slope) << '\n'
        << "  parameters  " << net.parameter_count() << '\n'
        << "  seed        " << ckpt.seed << '\n';
    if (net.mask) {
      out << "  threshold   " << format_fixed(net.mask->threshold) << '\n'
          << "  selected    " << net.mask->selected_count() << ": " << index_list(net.mask->selected_indices())
          << '\n';
    }
    return 0;
  }
  if (magic == std::string("PCMDATA\0", 8)) {
    const auto data = load_binary(path);
    out << "dataset " << path.string() << '\n'
        << "  split       " << to_string(data.split) << '\n'
        << "  rows        " << data.rows() << '\n'
        << "  inputs      " << data.dims() << '\n'
        << "  output      " << data.schema.output_name << '\n'
        << "  scaled      " << (data.scaler ? "yes" : "no") << '\n'
        << "  groups      " << (data.groups.empty() ? "none" : "per row") << '\n';
    if (data.truth_drivers) out << "  truth       " << index_list(*data.truth_drivers) << '\n';
    return 0;
  }
  if (!magic.empty() && magic.front() == '{') {
    const auto m = load_manifest(path);
    out << "manifest " << path.string() << '\n'
        << "  command     " << m.command << " (" << m.tool << ' ' << m.version << ")\n"
        << "  seed        " << m.seed << '\n'
        << "  started     " << m.started_at << '\n'
        << "  finished    " << (m.finished_at.empty() ? "-" : m.finished_at) << '\n';
    for (const auto& s : m.stages) {
      out << "  stage " << s.name << ": " << to_string(s.status);
      if (s.message) out << " (" << *s.message << ')';
      out << '\n';
    }
    for (const auto& a : m.artifacts) out << "  " << a.sha256.substr(0, 12) << "  " << a.path << '\n';
    return 0;
  }
  MaskFile mask;
  try {
    mask = load_mask_file(path);
  } catch (const ParseError&) {
    throw UsageError("unrecognized file type: " + path.string());
  }
  out << "mask " << path.string() << '\n'
      << "  inputs      " << mask.mask.size() << '\n'
      << "  threshold   " << format_fixed(mask.mask.threshold) << '\n'
      << "  selected    " << mask.mask.selected_count() << ": " << index_list(mask.mask.selected_indices()) << '\n';
  return 0;
}

std::string single_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

std::string tool_version() { return PCM_VERSION; }

const std::vector<std::string>& train_stages() {
  static const std::vector<std::string> stages{"data", "premask", "mask_vector", "grid", "sweep", "select",
                                               "report"};
  return stages;
}

void save_scaler_json(const fs::path& path, const ScalerStats& stats) {
  save_json(path, Json{{"input_scaling", to_string(stats.input_scaling)},
                       {"output_factor", stats.output_factor},
                       {"mean", stats.mean},
                       {"stddev", stats.stddev}});
}

ScalerStats load_scaler_json(const fs::path& path) {
  const Json j = read_json(path);
  try {
    ScalerStats s;
    s.input_scaling = parse_input_scaling(j.at("input_scaling").get<std::string>());
    s.output_factor = j.at("output_factor").get<double>();
    s.mean = j.at("mean").get<std::vector<double>>();
    s.stddev = j.at("stddev").get<std::vector<double>>();
    if (s.mean.size() != s.stddev.size()) throw ParseError(path.string() + ": mean/stddev length mismatch");
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-phase input-masking training for sparse neural emulators", "pcmask"};
  app.set_version_flag("--version", tool_version());
  app.require_subcommand(1);

  GenDataOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "generate a synthetic benchmark with known drivers");
  gen_cmd->add_option("spec", gen.spec, "generator spec file")->required();
  gen_cmd->add_option("-o,--output", gen.output, "output directory");
  gen_cmd->add_option("--format", gen.format, "dataset file format")->check(CLI::IsMember({"bin", "csv"}));
  gen_cmd->add_option("--seed", gen.seed, "override the generator seed");

  TrainOverrides train;
  auto* train_cmd = app.add_subcommand("train", "run the pre-mask / threshold sweep / mask pipeline");
  add_train_options(*train_cmd, train);

  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("evaluate", "R2 and group profiles of a checkpoint on a dataset");
  eval_cmd->add_option("checkpoint", eval.checkpoint)->required();
  eval_cmd->add_option("dataset", eval.dataset)->required();
  eval_cmd->add_option("--schema", eval.schema, "schema file (required for CSV data)");
  eval_cmd->add_option("--scaler", eval.scaler, "scaler.json (default: beside the checkpoint)");
  eval_cmd->add_option("-o,--output", eval.output, "report directory");
  eval_cmd->add_option("--eval-batch", eval.eval_batch)->check(CLI::PositiveNumber);

  AttributeOptions attr;
  auto* attr_cmd = app.add_subcommand("attribute", "mean absolute Shapley attribution per input");
  attr_cmd->add_option("checkpoint", attr.checkpoint)->required();
  attr_cmd->add_option("dataset", attr.dataset)->required();
  attr_cmd->add_option("--schema", attr.schema);
  attr_cmd->add_option("--scaler", attr.scaler);
  attr_cmd->add_option("-o,--output", attr.output, "report directory");
  attr_cmd->add_option("-n,--samples", attr.samples, "explained rows")->check(CLI::PositiveNumber);
  attr_cmd->add_option("--background", attr.background, "background rows")->check(CLI::PositiveNumber);
  attr_cmd->add_option("--permutations", attr.permutations, "permutations per sample")->check(CLI::PositiveNumber);
  attr_cmd->add_option("--seed", attr.seed);
  attr_cmd->add_option("--jobs", attr.jobs)->check(CLI::PositiveNumber);
  attr_cmd->add_flag("--exact", attr.exact, "enumerate all coalitions (d <= 15)");
  attr_cmd->add_flag("--physical-units", attr.physical, "divide by the output normalization constant");

  CompareOptions cmp;
  auto* cmp_cmd = app.add_subcommand("compare-masks", "overlap of two mask files");
  cmp_cmd->add_option("mask_a", cmp.a)->required();
  cmp_cmd->add_option("mask_b", cmp.b)->required();
  cmp_cmd->add_option("--levels", cmp.levels, "group inputs by level (index mod levels)");
  cmp_cmd->add_option("--grouping", cmp.grouping, "file with one group id per input");
  cmp_cmd->add_option("--translate-b", cmp.translate_b, "shift mask B by this many levels first");
  cmp_cmd->add_option("--csv", cmp.csv, "write the overlap table");
  cmp_cmd->add_option("--json", cmp.json, "write the overlap summary");

  std::string inspect_file;
  auto* inspect_cmd = app.add_subcommand("inspect", "describe a checkpoint, dataset, mask or manifest");
  inspect_cmd->add_option("file", inspect_file)->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << "pcmask: error[" << error_code_name(ErrorCode::kUsage) << "]: " << single_line(e.what()) << '\n';
    return exit_status(ErrorCode::kUsage);
  }

  try {
    if (*gen_cmd) return cmd_gen_data(*gen_cmd, gen, out);
    if (*train_cmd) return cmd_train(*train_cmd, train, out);
    if (*eval_cmd) return cmd_evaluate(eval, out, err);
    if (*attr_cmd) return cmd_attribute(attr, out, err);
    if (*cmp_cmd) return cmd_compare_masks(*cmp_cmd, cmp, out);
    if (*inspect_cmd) return cmd_inspect(inspect_file, out);
  } catch (const Error& e) {
    err << "pcmask: error[" << error_code_name(e.code()) << "]: " << single_line(e.what()) << '\n';
    return exit_status(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "pcmask: error[" << error_code_name(ErrorCode::kIo) << "]: " << single_line(e.what()) << '\n';
    return exit_status(ErrorCode::kIo);
  } catch (const std::exception& e) {
    err << "pcmask: error[INTERNAL]: " << single_line(e.what()) << '\n';
    return 1;
  }
  return exit_status(ErrorCode::kUsage);
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace pcm::cli
