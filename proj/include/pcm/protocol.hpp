#ifndef PCM_PROTOCOL_HPP_
#define PCM_PROTOCOL_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pcm/dataset.hpp"
#include "pcm/mask.hpp"
#include "pcm/network.hpp"
#include "pcm/optim.hpp"

namespace pcm {

// Hyper-parameters of both training phases. Defaults are the reference
// configuration: lambda 0.001, 9 + 9 epochs, lr 0.001 divided by 5 every
// 3 epochs, batch 1024 (8192 for evaluation), 20 thresholds, seed 42,
// nine 256-unit Leaky ReLU(0.3) hidden layers.
struct TrainingConfig {
  double lambda = 0.001;
  std::size_t epochs_premask = 9;
  std::size_t epochs_mask = 9;
  LrSchedule lr_schedule{};
  std::size_t train_batch = 1024;
  std::size_t eval_batch = 8192;
  std::uint64_t seed = 42;
  std::size_t n_thresholds = 20;
  std::vector<std::size_t> hidden_widths = std::vector<std::size_t>(9, 256);
  double negative_slope = 0.3;
  // Worker threads for the threshold sweep. Results do not depend on it.
  std::size_t jobs = 1;

  void validate() const;
  Architecture architecture(std::size_t inputs) const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0.0;
  LossBreakdown train;  // sample-weighted mean over the epoch's batches
  std::optional<double> val_mse;
};

struct TrainingHistory {
  LossBreakdown initial;  // full training set, before the first update
  LossBreakdown final;    // full training set, after the last update
  std::vector<EpochRecord> epochs;
  std::vector<std::string> warnings;
};

struct TrainedNetwork {
  Network network;
  TrainingHistory history;
};

// Full-dataset loss, evaluated in chunks of `eval_batch` rows.
LossBreakdown evaluate_loss(const Network& net, const Dataset& data, double lambda,
                            std::size_t eval_batch);

// Runs `epochs` epochs of ADAM on `net` in place. lambda must be 0 for mask
// networks. `batch_seed` seeds the per-epoch shuffles.
TrainingHistory train_network(Network& net, const Dataset& train, const TrainingConfig& config,
                              std::size_t epochs, double lambda, std::uint64_t batch_seed,
                              const Dataset* validation = nullptr);

// Pre-mask phase: fresh network (seeded init) trained on MSE + the scaled
// L1 penalty of the input kernel.
TrainedNetwork train_premask(const Dataset& train, const TrainingConfig& config,
                             const Dataset* validation = nullptr);

// Column L2 norms of the input kernel (bias excluded).
MaskVector extract_mask_vector(const Network& premask);

// Mask phase: warm start from the pre-mask hidden/output layers, input
// gated by `mask`, trained on plain MSE. The LR schedule restarts at epoch 0.
TrainedNetwork train_mask(const Network& premask, const BinaryMask& mask, const Dataset& train,
                          const TrainingConfig& config, const Dataset* validation = nullptr);

struct SweepRecord {
  double threshold = 0.0;
  BinaryMask mask;
  double final_train_loss = 0.0;  // NaN if the run failed
  std::optional<double> final_val_loss;
  std::size_t selected_count = 0;
  std::optional<std::string> error;
  Network network;
  TrainingHistory history;
};

struct SweepResult {
  MaskVector mask_vector;
  ThresholdGrid grid;
  std::vector<SweepRecord> records;
};

// One independent mask-phase run per grid threshold, each restarted from
// the same pre-mask snapshot with the same seed. A failed run is recorded
// and the sweep continues.
SweepResult sweep_thresholds(const Network& premask, const Dataset& train,
                             const TrainingConfig& config, const Dataset* validation = nullptr);

// Same, over an explicit grid.
SweepResult sweep_thresholds(const Network& premask, const MaskVector& m, const ThresholdGrid& grid,
                             const Dataset& train, const TrainingConfig& config,
                             const Dataset* validation = nullptr);

struct Selection {
  std::size_t index = 0;
  double threshold = 0.0;
  const Network* network = nullptr;
};

// Lowest final training loss; exact ties go to the larger threshold.
Selection select_best(const SweepResult& sweep);

// threshold,selected_count,final_train_loss,final_val_loss,bits,error
void save_sweep_csv(const std::filesystem::path& path, const SweepResult& sweep);

}  // namespace pcm

#endif  // PCM_PROTOCOL_HPP_
