#include "pcm/cli/run_config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "pcm/error.hpp"
#include "pcm/text.hpp"

namespace pcm::cli {
namespace {

using boost::property_tree::ptree;

ptree read_tree(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("config file not found: " + path.string());
  ptree tree;
  try {
    boost::property_tree::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ParseError(path.string() + ": " + e.message(), e.line());
  }
  return tree;
}

std::optional<std::string> get(const ptree& tree, const std::string& key) {
  if (auto v = tree.get_optional<std::string>(key)) return std::string(trim(*v));
  return std::nullopt;
}

// Field-named wrappers so a bad value reports which key it came from.
double get_real(const ptree& tree, const std::string& key, double fallback) {
  const auto v = get(tree, key);
  if (!v) return fallback;
  try {
    return parse_real(*v);
  } catch (const ParseError& e) {
    throw ValidationError(key, e.what());
  }
}

std::size_t get_count(const ptree& tree, const std::string& key, std::size_t fallback) {
  const auto v = get(tree, key);
  if (!v) return fallback;
  try {
    return parse_count(*v);
  } catch (const ParseError& e) {
    throw ValidationError(key, e.what());
  }
}

std::int64_t get_int(const ptree& tree, const std::string& key, std::int64_t fallback) {
  const auto v = get(tree, key);
  if (!v) return fallback;
  try {
    return parse_integer(*v);
  } catch (const ParseError& e) {
    throw ValidationError(key, e.what());
  }
}

std::vector<std::size_t> get_indices(const ptree& tree, const std::string& key) {
  std::vector<std::size_t> out;
  const auto v = get(tree, key);
  if (!v || v->empty()) return out;
  for (const auto& f : split(*v, ',')) {
    try {
      out.push_back(parse_count(f));
    } catch (const ParseError& e) {
      throw ValidationError(key, e.what());
    }
  }
  return out;
}

std::vector<double> get_reals(const ptree& tree, const std::string& key) {
  std::vector<double> out;
  const auto v = get(tree, key);
  if (!v || v->empty()) return out;
  for (const auto& f : split(*v, ',')) {
    try {
      out.push_back(parse_real(f));
    } catch (const ParseError& e) {
      throw ValidationError(key, e.what());
    }
  }
  return out;
}

SyntheticSpec parse_synthetic(const ptree& tree) {
  SyntheticSpec spec;
  if (auto m = get(tree, "synthetic.mechanism")) spec.mechanism = parse_mechanism(*m);
  spec.d = get_count(tree, "synthetic.d", spec.d);
  spec.n_samples = get_count(tree, "synthetic.n_samples", spec.n_samples);
  spec.driver_set = get_indices(tree, "synthetic.driver_set");
  spec.driver_weights = get_reals(tree, "synthetic.driver_weights");
  spec.spurious_corr = get_real(tree, "synthetic.spurious_corr", spec.spurious_corr);
  spec.noise_std = get_real(tree, "synthetic.noise_std", spec.noise_std);
  spec.shift = static_cast<int>(get_int(tree, "synthetic.shift", spec.shift));
  spec.seed = static_cast<std::uint64_t>(get_int(tree, "synthetic.seed", static_cast<std::int64_t>(spec.seed)));
  spec.n_groups = get_count(tree, "synthetic.n_groups", spec.n_groups);
  spec.column.levels = get_count(tree, "synthetic.levels", spec.column.levels);
  spec.column.target_level = get_count(tree, "synthetic.target_level", spec.column.target_level);
  spec.column.window_radius = get_count(tree, "synthetic.window_radius", spec.column.window_radius);
  spec.column.lower_levels = get_count(tree, "synthetic.lower_levels", spec.column.lower_levels);
  spec.column.lower_channel = get_count(tree, "synthetic.lower_channel", spec.column.lower_channel);
  return spec;
}

SplitConfig parse_split(const ptree& tree) {
  SplitConfig split_cfg;
  const auto f = get_reals(tree, "split.fractions");
  if (!f.empty()) {
    if (f.size() != 3) throw ValidationError("split.fractions", "expected three comma-separated values");
    split_cfg.fractions = {f[0], f[1], f[2]};
  }
  if (get(tree, "split.seed")) split_cfg.seed = static_cast<std::uint64_t>(get_int(tree, "split.seed", 0));
  return split_cfg;
}

std::string join_indices(const std::vector<std::size_t>& v) {
  std::vector<std::string> parts;
  for (auto x : v) parts.push_back(std::to_string(x));
  return join(parts, ",");
}

std::string join_reals(const std::vector<double>& v) {
  std::vector<std::string> parts;
  for (auto x : v) parts.push_back(format_real(x));
  return join(parts, ",");
}

void write_synthetic(std::ostream& out, const SyntheticSpec& s) {
  out << "[synthetic]\n"
      << "mechanism = " << to_string(s.mechanism) << '\n'
      << "d = " << s.d << '\n'
      << "n_samples = " << s.n_samples << '\n'
      << "driver_set = " << join_indices(s.driver_set) << '\n'
      << "driver_weights = " << join_reals(s.driver_weights) << '\n'
      << "spurious_corr = " << format_real(s.spurious_corr) << '\n'
      << "noise_std = " << format_real(s.noise_std) << '\n'
      << "shift = " << s.shift << '\n'
      << "seed = " << s.seed << '\n'
      << "n_groups = " << s.n_groups << '\n'
      << "levels = " << s.column.levels << '\n'
      << "target_level = " << s.column.target_level << '\n'
      << "window_radius = " << s.column.window_radius << '\n'
      << "lower_levels = " << s.column.lower_levels << '\n'
      << "lower_channel = " << s.column.lower_channel << "\n\n";
}

void write_split(std::ostream& out, const SplitConfig& s) {
  out << "[split]\n"
      << "fractions = " << join_reals({s.fractions.begin(), s.fractions.end()}) << '\n';
  if (s.seed) out << "seed = " << *s.seed << '\n';
  out << '\n';
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace

bool RunConfig::wants(const std::string& format) const {
  for (const auto& f : report_formats) {
    if (f == format) return true;
  }
  return false;
}

void RunConfig::validate() const {
  training.validate();
  if (!train_path && !synthetic) throw ValidationError("data.train", "no training data or [synthetic] section");
  if (train_path && synthetic) throw ValidationError("data", "give either [data] or [synthetic], not both");
  if (synthetic) synthetic->validate();
  for (const auto& p : {train_path, val_path, test_path, schema_path}) {
    if (p && !std::filesystem::exists(*p)) throw ValidationError("data", "path does not exist: " + p->string());
  }
  for (const auto& f : report_formats) {
    if (f != "csv" && f != "json") throw ValidationError("output.formats", "unknown format " + f);
  }
  if (output_dir.empty()) throw ValidationError("output.dir", "empty");
  std::error_code ec;
  std::filesystem::create_directories(output_dir, ec);
  const auto probe = output_dir / ".write-probe";
  {
    std::ofstream out(probe);
    if (ec || !out) throw ValidationError("output.dir", "not writable: " + output_dir.string());
  }
  std::filesystem::remove(probe, ec);
}

std::filesystem::path default_output_root() {
  if (const char* root = std::getenv(kOutputRootEnv); root && *root) return root;
  return std::filesystem::current_path();
}

RunConfig load_run_config(const std::filesystem::path& path) {
  const ptree tree = read_tree(path);
  const auto base = path.parent_path();
  RunConfig cfg;
  if (auto v = get(tree, "data.train")) cfg.train_path = resolve(base, *v);
  if (auto v = get(tree, "data.val")) cfg.val_path = resolve(base, *v);
  if (auto v = get(tree, "data.test")) cfg.test_path = resolve(base, *v);
  if (auto v = get(tree, "data.schema")) cfg.schema_path = resolve(base, *v);
  if (tree.get_child_optional("synthetic")) cfg.synthetic = parse_synthetic(tree);
  cfg.split = parse_split(tree);

  auto& t = cfg.training;
  t.lambda = get_real(tree, "training.lambda", t.lambda);
  t.epochs_premask = get_count(tree, "training.epochs_premask", t.epochs_premask);
  t.epochs_mask = get_count(tree, "training.epochs_mask", t.epochs_mask);
  t.lr_schedule.initial_lr = get_real(tree, "training.initial_lr", t.lr_schedule.initial_lr);
  t.lr_schedule.decay_factor = get_real(tree, "training.lr_decay_factor", t.lr_schedule.decay_factor);
  t.lr_schedule.decay_every = get_count(tree, "training.lr_decay_every", t.lr_schedule.decay_every);
  t.train_batch = get_count(tree, "training.train_batch", t.train_batch);
  t.eval_batch = get_count(tree, "training.eval_batch", t.eval_batch);
  t.seed = static_cast<std::uint64_t>(get_int(tree, "training.seed", static_cast<std::int64_t>(t.seed)));
  t.n_thresholds = get_count(tree, "training.n_thresholds", t.n_thresholds);
  if (auto v = get(tree, "training.hidden")) t.hidden_widths = parse_hidden(*v);
  t.negative_slope = get_real(tree, "training.negative_slope", t.negative_slope);
  t.jobs = get_count(tree, "training.jobs", t.jobs);

  if (auto v = get(tree, "output.dir")) {
    const std::filesystem::path dir(*v);
    cfg.output_dir = dir.is_absolute() ? dir : default_output_root() / dir;
  }
  if (auto v = get(tree, "output.formats")) cfg.report_formats = split(*v, ',');
  return cfg;
}

std::string to_ini(const RunConfig& cfg) {
  std::ostringstream out;
  if (cfg.train_path || cfg.val_path || cfg.test_path || cfg.schema_path) {
    out << "[data]\n";
    if (cfg.train_path) out << "train = " << cfg.train_path->string() << '\n';
    if (cfg.val_path) out << "val = " << cfg.val_path->string() << '\n';
    if (cfg.test_path) out << "test = " << cfg.test_path->string() << '\n';
    if (cfg.schema_path) out << "schema = " << cfg.schema_path->string() << '\n';
    out << '\n';
  }
  if (cfg.synthetic) {
    write_synthetic(out, *cfg.synthetic);
    write_split(out, cfg.split);
  }
  const auto& t = cfg.training;
  out << "[training]\n"
      << "lambda = " << format_real(t.lambda) << '\n'
      << "epochs_premask = " << t.epochs_premask << '\n'
      << "epochs_mask = " << t.epochs_mask << '\n'
      << "initial_lr = " << format_real(t.lr_schedule.initial_lr) << '\n'
      << "lr_decay_factor = " << format_real(t.lr_schedule.decay_factor) << '\n'
      << "lr_decay_every = " << t.lr_schedule.decay_every << '\n'
      << "train_batch = " << t.train_batch << '\n'
      << "eval_batch = " << t.eval_batch << '\n'
      << "seed = " << t.seed << '\n'
      << "n_thresholds = " << t.n_thresholds << '\n'
      << "hidden = " << format_hidden(t.hidden_widths) << '\n'
      << "negative_slope = " << format_real(t.negative_slope) << '\n'
      << "jobs = " << t.jobs << "\n\n";
  out << "[output]\n"
      << "dir = " << cfg.output_dir.string() << '\n'
      << "formats = " << join(cfg.report_formats, ",") << '\n';
  return out.str();
}

GenDataSpec load_gen_data_spec(const std::filesystem::path& path) {
  const ptree tree = read_tree(path);
  if (!tree.get_child_optional("synthetic")) throw ValidationError("synthetic", "section missing");
  GenDataSpec spec{parse_synthetic(tree), parse_split(tree)};
  spec.synthetic.validate();
  return spec;
}

std::string to_ini(const GenDataSpec& spec) {
  std::ostringstream out;
  write_synthetic(out, spec.synthetic);
  write_split(out, spec.split);
  return out.str();
}

std::vector<std::size_t> parse_hidden(const std::string& text) {
  const auto t = std::string(trim(text));
  std::vector<std::size_t> out;
  if (t.empty() || t == "none") return out;
  try {
    if (const auto x = t.find('x'); x != std::string::npos) {
      const auto width = parse_count(t.substr(0, x));
      const auto count = parse_count(t.substr(x + 1));
      out.assign(count, width);
    } else {
      for (const auto& f : split(t, ',')) out.push_back(parse_count(f));
    }
  } catch (const ParseError& e) {
    throw ValidationError("training.hidden", e.what());
  }
  for (auto w : out) {
    if (w == 0) throw ValidationError("training.hidden", "layer widths must be >= 1");
  }
  return out;
}

std::string format_hidden(const std::vector<std::size_t>& widths) {
  if (widths.empty()) return "none";
  if (widths.size() > 1 && std::all_of(widths.begin(), widths.end(), [&](auto w) { return w == widths[0]; })) {
    return std::to_string(widths[0]) + "x" + std::to_string(widths.size());
  }
  std::vector<std::string> parts;
  for (auto w : widths) parts.push_back(std::to_string(w));
  return join(parts, ",");
}

}  // namespace pcm::cli
