#ifndef PCM_DATASET_HPP_
#define PCM_DATASET_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pcm/types.hpp"

namespace pcm {

enum class InputScaling : std::uint8_t { kStandardize = 0, kNone = 1 };

std::string to_string(InputScaling scaling);
InputScaling parse_input_scaling(const std::string& name);

struct DatasetSchema {
  std::vector<std::string> input_names;
  std::string output_name = "y";
  // Targets are multiplied by this constant when the scaler is applied
  // (e.g. 1e-3 for fluxes in W m^-2).
  double output_norm_constant = 1.0;
  InputScaling input_scaling = InputScaling::kStandardize;
  // Optional integer column holding a grouping id (e.g. a latitude band)
  // used for profile reports. Not an input.
  std::optional<std::string> group_column;

  std::size_t inputs() const noexcept { return input_names.size(); }
  void validate() const;

  // x0..x{d-1}, output "y".
  static DatasetSchema generic(std::size_t d);
};

// Schema file: sectioned key = value text, e.g.
//
//   [dataset]
//   output = y
//   output_norm_constant = 1e-3
//   input_scaling = standardize
//   group_column = band
//   [inputs]
//   names = x0, x1, x2
DatasetSchema load_schema(const std::filesystem::path& path);
void save_schema(const std::filesystem::path& path, const DatasetSchema& schema);

enum class Split : std::uint8_t { kTrain = 0, kVal = 1, kTest = 2, kUnsplit = 3 };
std::string to_string(Split split);

struct ScalerStats {
  std::vector<double> mean;    // per input, train split only
  std::vector<double> stddev;  // population std, > 0
  double output_factor = 1.0;  // normalized target = target * output_factor
  InputScaling input_scaling = InputScaling::kStandardize;
};

struct Dataset {
  DatasetSchema schema;
  Matrix inputs;   // N x d
  Vector targets;  // N
  Split split = Split::kUnsplit;
  std::optional<ScalerStats> scaler;  // set once the scaler has been applied
  std::optional<std::vector<std::size_t>> truth_drivers;
  std::vector<std::int64_t> groups;  // empty, or one id per row

  std::size_t rows() const noexcept { return static_cast<std::size_t>(inputs.rows()); }
  std::size_t dims() const noexcept { return static_cast<std::size_t>(inputs.cols()); }
  void validate() const;

  // Rows selected by `index`, in that order.
  Dataset subset(const std::vector<std::size_t>& index) const;
};

// Fits on the training split. Throws ValidationError naming the column if
// any input has zero variance (when standardizing).
ScalerStats fit_scaler(const Dataset& train);
Dataset apply_scaler(const ScalerStats& stats, const Dataset& data);
Dataset invert_scaler(const ScalerStats& stats, const Dataset& data);

struct SplitDatasets {
  Dataset train;
  Dataset val;
  Dataset test;
};

// Disjoint, exhaustive, seed-deterministic three-way split. Rows are
// permuted once; the first share goes to train, then val, then test.
// Fractions must sum to 1; a split whose fraction is > 0 must not come out
// empty.
SplitDatasets shuffle_and_split(const Dataset& raw, std::array<double, 3> fractions,
                                std::uint64_t seed);

struct Batch {
  Matrix inputs;
  Vector targets;
};

// Mini-batch iterator. Each epoch visits every row exactly once in an order
// drawn from mt19937_64(derive_seed(seed, epoch)); the last batch may be
// short.
class BatchIterator {
 public:
  BatchIterator(const Dataset& data, std::size_t batch_size, std::uint64_t seed);

  void start_epoch(std::size_t epoch);
  bool next(Batch& batch);

  std::size_t batches_per_epoch() const noexcept;
  const std::vector<std::size_t>& order() const noexcept { return order_; }

 private:
  const Dataset* data_;
  std::size_t batch_size_;
  std::uint64_t seed_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

// CSV: header row of names, one sample per row. Columns are matched by
// header name so their order is free; columns outside the schema are
// ignored. Errors report the offending line.
Dataset load_csv(const std::filesystem::path& path, const DatasetSchema& schema);
void save_csv(const std::filesystem::path& path, const Dataset& data);

// Compact binary format, see docs/formats.md.
void save_binary(const std::filesystem::path& path, const Dataset& data);
Dataset load_binary(const std::filesystem::path& path);

// Picks the loader by extension: ".csv" needs a schema, anything else is
// read as the binary format.
Dataset load_dataset(const std::filesystem::path& path, const std::optional<DatasetSchema>& schema);

void save_truth_file(const std::filesystem::path& path, const std::vector<std::size_t>& drivers);
std::vector<std::size_t> load_truth_file(const std::filesystem::path& path);

}  // namespace pcm

#endif  // PCM_DATASET_HPP_
