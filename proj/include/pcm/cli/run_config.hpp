#ifndef PCM_CLI_RUN_CONFIG_HPP_
#define PCM_CLI_RUN_CONFIG_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pcm/protocol.hpp"
#include "pcm/synthetic.hpp"

namespace pcm::cli {

// Environment variable naming the default output root.
inline constexpr const char* kOutputRootEnv = "PCMASK_OUTPUT_ROOT";

struct SplitConfig {
  std::array<double, 3> fractions{0.6, 0.2, 0.2};
  std::optional<std::uint64_t> seed;  // defaults to the generator seed
};

// Everything a `train` run needs. Loaded from a flat sectioned key = value
// file; relative data paths resolve against the config file's directory.
//
//   [data]       train, val, test, schema
//   [synthetic]  generator spec, used when [data] is absent
//   [split]      fractions, seed
//   [training]   lambda, epochs_premask, epochs_mask, initial_lr,
//                lr_decay_factor, lr_decay_every, train_batch, eval_batch,
//                seed, n_thresholds, hidden, negative_slope, jobs
//   [output]     dir, formats
struct RunConfig {
  std::optional<std::filesystem::path> train_path;
  std::optional<std::filesystem::path> val_path;
  std::optional<std::filesystem::path> test_path;
  std::optional<std::filesystem::path> schema_path;
  std::optional<SyntheticSpec> synthetic;
  SplitConfig split;
  TrainingConfig training;
  std::filesystem::path output_dir;
  std::vector<std::string> report_formats{"csv", "json"};

  bool wants(const std::string& format) const;
  // Checks the hyper-parameters, that referenced paths exist, and that the
  // output directory can be created and written.
  void validate() const;
};

std::filesystem::path default_output_root();

RunConfig load_run_config(const std::filesystem::path& path);

// Effective configuration in the same key = value format (the manifest
// snapshot and --print-config output).
std::string to_ini(const RunConfig& config);

// A standalone generator spec: [synthetic] and optional [split] sections.
struct GenDataSpec {
  SyntheticSpec synthetic;
  SplitConfig split;
};
GenDataSpec load_gen_data_spec(const std::filesystem::path& path);
std::string to_ini(const GenDataSpec& spec);

// "256x9", "64,64", or "" (no hidden layers).
std::vector<std::size_t> parse_hidden(const std::string& text);
std::string format_hidden(const std::vector<std::size_t>& widths);

}  // namespace pcm::cli

#endif  // PCM_CLI_RUN_CONFIG_HPP_
