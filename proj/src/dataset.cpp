#include "pcm/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "pcm/binary_io.hpp"
#include "pcm/error.hpp"
#include "pcm/rng.hpp"
#include "pcm/text.hpp"

namespace pcm {
namespace {

constexpr std::string_view kDataMagic{"PCMDATA\0", 8};
constexpr std::uint32_t kDataVersion = 1;

}  // namespace

std::string to_string(InputScaling s) {
  return s == InputScaling::kStandardize ? "standardize" : "none";
}

InputScaling parse_input_scaling(const std::string& s) {
  if (s == "standardize") return InputScaling::kStandardize;
  if (s == "none") return InputScaling::kNone;
  throw ParseError("input_scaling must be \"standardize\" or \"none\", got \"" + s + "\"");
}

void DatasetSchema::validate() const {
  if (input_names.empty()) throw ValidationError("inputs.names", "schema has no inputs");
  std::set<std::string> seen;
  for (const auto& name : input_names) {
    if (name.empty()) throw ValidationError("inputs.names", "empty input name");
    if (!seen.insert(name).second) throw ValidationError("inputs.names", "duplicate name " + name);
  }
  if (output_name.empty()) throw ValidationError("dataset.output", "empty output name");
  if (seen.count(output_name)) throw ValidationError("dataset.output", "output name collides with an input");
  if (group_column && (seen.count(*group_column) || *group_column == output_name)) {
    throw ValidationError("dataset.group_column", "collides with an input or the output");
  }
  if (!(output_norm_constant > 0.0) || !std::isfinite(output_norm_constant)) {
    throw ValidationError("dataset.output_norm_constant", "must be a finite value > 0");
  }
}

DatasetSchema DatasetSchema::generic(std::size_t d) {
  DatasetSchema schema;
  for (std::size_t j = 0; j < d; ++j) schema.input_names.push_back("x" + std::to_string(j));
  return schema;
}

DatasetSchema load_schema(const std::filesystem::path& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ParseError(path.string() + ": " + e.message(), e.line());
  }
  DatasetSchema schema;
  const auto names = tree.get_optional<std::string>("inputs.names");
  if (!names) throw ParseError(path.string() + ": missing [inputs] names");
  schema.input_names = split(*names, ',');
  schema.output_name = tree.get<std::string>("dataset.output", "y");
  if (auto c = tree.get_optional<std::string>("dataset.output_norm_constant")) {
    schema.output_norm_constant = parse_real(*c);
  }
  schema.input_scaling = parse_input_scaling(tree.get<std::string>("dataset.input_scaling", "standardize"));
  if (auto g = tree.get_optional<std::string>("dataset.group_column")) {
    if (!trim(*g).empty()) schema.group_column = std::string(trim(*g));
  }
  schema.validate();
  return schema;
}

void save_schema(const std::filesystem::path& path, const DatasetSchema& schema) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "[dataset]\n"
      << "output = " << schema.output_name << '\n'
      << "output_norm_constant = " << format_real(schema.output_norm_constant) << '\n'
      << "input_scaling = " << to_string(schema.input_scaling) << '\n';
  if (schema.group_column) out << "group_column = " << *schema.group_column << '\n';
  out << "\n[inputs]\nnames = " << join(schema.input_names, ", ") << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

std::string to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
    case Split::kUnsplit: return "unsplit";
  }
  return "unknown";
}

void Dataset::validate() const {
  schema.validate();
  if (static_cast<std::size_t>(inputs.cols()) != schema.inputs()) {
    throw ShapeError("dataset has " + std::to_string(inputs.cols()) + " input columns, schema names " +
                     std::to_string(schema.inputs()));
  }
  if (inputs.rows() != targets.size()) throw ShapeError("input rows and target length differ");
  if (!groups.empty() && groups.size() != rows()) throw ShapeError("group ids do not cover every row");
  if (!inputs.allFinite() || !targets.allFinite()) throw NumericError("dataset contains non-finite values");
  if (truth_drivers) {
    for (auto j : *truth_drivers) {
      if (j >= dims()) throw ShapeError("truth driver index out of range");
    }
  }
}

Dataset Dataset::subset(const std::vector<std::size_t>& index) const {
  Dataset out;
  out.schema = schema;
  out.split = split;
  out.scaler = scaler;
  out.truth_drivers = truth_drivers;
  out.inputs.resize(static_cast<Index>(index.size()), inputs.cols());
  out.targets.resize(static_cast<Index>(index.size()));
  if (!groups.empty()) out.groups.resize(index.size());
  for (std::size_t r = 0; r < index.size(); ++r) {
    const auto src = static_cast<Index>(index[r]);
    out.inputs.row(static_cast<Index>(r)) = inputs.row(src);
    out.targets[static_cast<Index>(r)] = targets[src];
    if (!groups.empty()) out.groups[r] = groups[index[r]];
  }
  return out;
}

ScalerStats fit_scaler(const Dataset& train) {
  if (train.rows() == 0) throw ShapeError("cannot fit a scaler on an empty dataset");
  ScalerStats stats;
  stats.input_scaling = train.schema.input_scaling;
  stats.output_factor = train.schema.output_norm_constant;
  const auto d = train.dims();
  stats.mean.assign(d, 0.0);
  stats.stddev.assign(d, 1.0);
  if (stats.input_scaling == InputScaling::kNone) return stats;

  const double n = static_cast<double>(train.rows());
  for (std::size_t j = 0; j < d; ++j) {
    const auto col = train.inputs.col(static_cast<Index>(j));
    const double mean = col.sum() / n;
    const double var = (col.array() - mean).square().sum() / n;
    const double sd = std::sqrt(var);
    if (!(sd > 0.0) || sd <= 1e-12 * std::max(1.0, std::abs(mean))) {
      throw ValidationError(train.schema.input_names[j], "zero variance on the training split");
    }
    stats.mean[j] = mean;
    stats.stddev[j] = sd;
  }
  return stats;
}

Dataset apply_scaler(const ScalerStats& stats, const Dataset& data) {
  if (stats.mean.size() != data.dims()) throw ShapeError("scaler and dataset widths differ");
  Dataset out = data;
  for (std::size_t j = 0; j < data.dims(); ++j) {
    auto col = out.inputs.col(static_cast<Index>(j));
    col = (col.array() - stats.mean[j]) / stats.stddev[j];
  }
  out.targets *= stats.output_factor;
  out.scaler = stats;
  return out;
}

Dataset invert_scaler(const ScalerStats& stats, const Dataset& data) {
  if (stats.mean.size() != data.dims()) throw ShapeError("scaler and dataset widths differ");
  Dataset out = data;
  for (std::size_t j = 0; j < data.dims(); ++j) {
    auto col = out.inputs.col(static_cast<Index>(j));
    col = col.array() * stats.stddev[j] + stats.mean[j];
  }
  out.targets /= stats.output_factor;
  out.scaler.reset();
  return out;
}

SplitDatasets shuffle_and_split(const Dataset& raw, std::array<double, 3> fractions,
                                std::uint64_t seed) {
  for (double f : fractions) {
    if (!(f >= 0.0)) throw ValidationError("fractions", "must be non-negative");
  }
  const double total = fractions[0] + fractions[1] + fractions[2];
  if (std::abs(total - 1.0) > 1e-9) throw ValidationError("fractions", "must sum to 1");

  const std::size_t n = raw.rows();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, stream::kSplit));
  shuffle_indices(order, rng);

  const auto n_train = static_cast<std::size_t>(std::llround(fractions[0] * static_cast<double>(n)));
  const auto n_val = std::min(
      n - n_train, static_cast<std::size_t>(std::llround(fractions[1] * static_cast<double>(n))));
  const std::array<std::size_t, 3> sizes{n_train, n_val, n - n_train - n_val};
  const std::array<const char*, 3> names{"train", "val", "test"};
  for (int s = 0; s < 3; ++s) {
    if (fractions[s] > 0.0 && sizes[s] == 0) {
      throw ValidationError(std::string("fractions.") + names[s], "split came out empty");
    }
  }

  auto take = [&](std::size_t begin, std::size_t count, Split split) {
    std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                 order.begin() + static_cast<std::ptrdiff_t>(begin + count));
    Dataset part = raw.subset(idx);
    part.split = split;
    return part;
  };
  return SplitDatasets{take(0, sizes[0], Split::kTrain), take(sizes[0], sizes[1], Split::kVal),
                       take(sizes[0] + sizes[1], sizes[2], Split::kTest)};
}

BatchIterator::BatchIterator(const Dataset& data, std::size_t batch_size, std::uint64_t seed)
    : data_(&data), batch_size_(batch_size), seed_(seed), order_(data.rows()) {
  if (batch_size == 0) throw UsageError("batch size must be >= 1");
  start_epoch(0);
}

void BatchIterator::start_epoch(std::size_t epoch) {
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  Rng rng(derive_seed(seed_, epoch));
  shuffle_indices(order_, rng);
  cursor_ = 0;
}

bool BatchIterator::next(Batch& batch) {
  if (cursor_ >= order_.size()) return false;
  const std::size_t n = std::min(batch_size_, order_.size() - cursor_);
  batch.inputs.resize(static_cast<Index>(n), data_->inputs.cols());
  batch.targets.resize(static_cast<Index>(n));
  for (std::size_t r = 0; r < n; ++r) {
    const auto src = static_cast<Index>(order_[cursor_ + r]);
    batch.inputs.row(static_cast<Index>(r)) = data_->inputs.row(src);
    batch.targets[static_cast<Index>(r)] = data_->targets[src];
  }
  cursor_ += n;
  return true;
}

std::size_t BatchIterator::batches_per_epoch() const noexcept {
  return (order_.size() + batch_size_ - 1) / batch_size_;
}

Dataset load_csv(const std::filesystem::path& path, const DatasetSchema& schema) {
  schema.validate();
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw ParseError("missing header row", 1);
  const auto header = split(line, ',');
  std::unordered_map<std::string, std::size_t> column;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (!column.emplace(header[c], c).second) throw ParseError("duplicate column " + header[c], 1);
  }
  auto find = [&](const std::string& name) {
    const auto it = column.find(name);
    if (it == column.end()) throw ParseError("missing column \"" + name + "\"", 1);
    return it->second;
  };
  std::vector<std::size_t> input_cols;
  for (const auto& name : schema.input_names) input_cols.push_back(find(name));
  const std::size_t output_col = find(schema.output_name);
  std::optional<std::size_t> group_col;
  if (schema.group_column) group_col = find(*schema.group_column);

  std::vector<double> x;
  std::vector<double> y;
  std::vector<std::int64_t> groups;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != header.size()) {
      throw ParseError("row has " + std::to_string(fields.size()) + " fields, header has " +
                           std::to_string(header.size()),
                       lineno);
    }
    for (auto c : input_cols) x.push_back(parse_real(fields[c], lineno));
    y.push_back(parse_real(fields[output_col], lineno));
    if (group_col) groups.push_back(parse_integer(fields[*group_col], lineno));
  }

  Dataset data;
  data.schema = schema;
  const auto n = static_cast<Index>(y.size());
  data.inputs = Eigen::Map<Matrix>(x.data(), n, static_cast<Index>(schema.inputs()));
  data.targets = Eigen::Map<Vector>(y.data(), n);
  data.groups = std::move(groups);
  return data;
}

void save_csv(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << join(data.schema.input_names, ",") << ',' << data.schema.output_name;
  const bool with_groups = data.schema.group_column && !data.groups.empty();
  if (with_groups) out << ',' << *data.schema.group_column;
  out << '\n';
  for (std::size_t r = 0; r < data.rows(); ++r) {
    for (std::size_t j = 0; j < data.dims(); ++j) {
      out << format_real(data.inputs(static_cast<Index>(r), static_cast<Index>(j))) << ',';
    }
    out << format_real(data.targets[static_cast<Index>(r)]);
    if (with_groups) out << ',' << data.groups[r];
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

void save_binary(const std::filesystem::path& path, const Dataset& data) {
  data.validate();
  binary::Writer w(path);
  w.magic(kDataMagic);
  w.u32(kDataVersion);
  w.u8(static_cast<std::uint8_t>(data.split));
  w.u8(static_cast<std::uint8_t>(data.schema.input_scaling));
  w.u8(data.scaler ? 1 : 0);
  w.u8(data.truth_drivers ? 1 : 0);
  w.u64(data.rows());
  w.u64(data.dims());
  w.string(data.schema.output_name);
  w.f64(data.schema.output_norm_constant);
  w.string(data.schema.group_column.value_or(""));
  for (const auto& name : data.schema.input_names) w.string(name);
  if (data.truth_drivers) {
    w.u64(data.truth_drivers->size());
    for (auto j : *data.truth_drivers) w.u64(j);
  }
  if (data.scaler) {
    w.u8(static_cast<std::uint8_t>(data.scaler->input_scaling));
    w.f64s(data.scaler->mean.data(), data.dims());
    w.f64s(data.scaler->stddev.data(), data.dims());
    w.f64(data.scaler->output_factor);
  }
  w.u8(data.groups.empty() ? 0 : 1);
  for (auto g : data.groups) w.u64(static_cast<std::uint64_t>(g));
  w.f64s(data.inputs.data(), static_cast<std::size_t>(data.inputs.size()));
  w.f64s(data.targets.data(), static_cast<std::size_t>(data.targets.size()));
}

Dataset load_binary(const std::filesystem::path& path) {
  binary::Reader r(path);
  r.expect_magic(kDataMagic);
  if (const auto v = r.u32(); v != kDataVersion) {
    throw ParseError(path.string() + ": unsupported dataset version " + std::to_string(v));
  }
  Dataset data;
  const auto split_byte = r.u8();
  if (split_byte > 3) throw ParseError(path.string() + ": bad split byte");
  data.split = static_cast<Split>(split_byte);
  const auto scaling = r.u8();
  if (scaling > 1) throw ParseError(path.string() + ": bad scaling byte");
  data.schema.input_scaling = static_cast<InputScaling>(scaling);
  const bool has_scaler = r.u8() != 0;
  const bool has_truth = r.u8() != 0;
  const auto rows = r.bounded_u64(std::uint64_t{1} << 40, "row count");
  const auto cols = r.bounded_u64(std::uint64_t{1} << 20, "column count");
  data.schema.output_name = r.string();
  data.schema.output_norm_constant = r.f64();
  if (auto g = r.string(); !g.empty()) data.schema.group_column = g;
  for (std::uint64_t j = 0; j < cols; ++j) data.schema.input_names.push_back(r.string());
  if (has_truth) {
    const auto n = r.bounded_u64(cols, "truth driver count");
    std::vector<std::size_t> truth(n);
    for (auto& j : truth) j = static_cast<std::size_t>(r.u64());
    data.truth_drivers = std::move(truth);
  }
  if (has_scaler) {
    ScalerStats stats;
    const auto s = r.u8();
    if (s > 1) throw ParseError(path.string() + ": bad scaler scaling byte");
    stats.input_scaling = static_cast<InputScaling>(s);
    stats.mean.resize(cols);
    stats.stddev.resize(cols);
    r.f64s(stats.mean.data(), cols);
    r.f64s(stats.stddev.data(), cols);
    stats.output_factor = r.f64();
    data.scaler = std::move(stats);
  }
  if (r.u8() != 0) {
    data.groups.resize(rows);
    for (auto& g : data.groups) g = static_cast<std::int64_t>(r.u64());
  }
  data.inputs.resize(static_cast<Index>(rows), static_cast<Index>(cols));
  data.targets.resize(static_cast<Index>(rows));
  r.f64s(data.inputs.data(), rows * cols);
  r.f64s(data.targets.data(), rows);
  if (!r.at_end()) throw ParseError(path.string() + ": trailing bytes");
  data.validate();
  return data;
}

Dataset load_dataset(const std::filesystem::path& path, const std::optional<DatasetSchema>& schema) {
  if (path.extension() == ".csv") {
    if (!schema) throw UsageError("loading " + path.string() + " requires a schema file");
    return load_csv(path, *schema);
  }
  Dataset data = load_binary(path);
  if (schema && schema->input_names != data.schema.input_names) {
    throw ShapeError(path.string() + ": input names differ from the schema");
  }
  return data;
}

void save_truth_file(const std::filesystem::path& path, const std::vector<std::size_t>& drivers) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (auto j : drivers) out << j << '\n';
}

std::vector<std::size_t> load_truth_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::size_t> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    out.push_back(parse_count(line, lineno));
  }
  return out;
}

}  // namespace pcm
