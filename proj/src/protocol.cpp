#include "pcm/protocol.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <thread>

#include "pcm/error.hpp"
#include "pcm/rng.hpp"
#include "pcm/text.hpp"

namespace pcm {

void TrainingConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ValidationError("lambda", "must be >= 0");
  if (epochs_premask < 1) throw ValidationError("epochs_premask", "must be >= 1");
  if (epochs_mask < 1) throw ValidationError("epochs_mask", "must be >= 1");
  if (train_batch < 1) throw ValidationError("train_batch", "must be >= 1");
  if (eval_batch < 1) throw ValidationError("eval_batch", "must be >= 1");
  if (n_thresholds < 1) throw ValidationError("n_thresholds", "must be >= 1");
  if (jobs < 1) throw ValidationError("jobs", "must be >= 1");
  lr_schedule.validate();
  for (auto w : hidden_widths) {
    if (w < 1) throw ValidationError("hidden", "layer widths must be >= 1");
  }
  if (!(negative_slope > 0.0 && negative_slope < 1.0)) {
    throw ValidationError("negative_slope", "must lie in (0, 1)");
  }
}

Architecture TrainingConfig::architecture(std::size_t inputs) const {
  return Architecture{inputs, hidden_widths, negative_slope};
}

LossBreakdown evaluate_loss(const Network& net, const Dataset& data, double lambda,
                            std::size_t eval_batch) {
  if (data.rows() == 0) throw ShapeError("cannot evaluate on an empty dataset");
  const Vector pred = predict(net, data.inputs, eval_batch);
  LossBreakdown out;
  out.mse = (pred - data.targets).squaredNorm() / static_cast<double>(data.rows());
  out.l1_penalty = net.mode == Mode::kPreMask ? input_kernel_penalty(net, lambda) : 0.0;
  out.total = out.mse + out.l1_penalty;
  return out;
}

TrainingHistory train_network(Network& net, const Dataset& train, const TrainingConfig& config,
                              std::size_t epochs, double lambda, std::uint64_t batch_seed,
                              const Dataset* validation) {
  config.validate();
  net.validate();
  if (net.mode == Mode::kMask && lambda != 0.0) throw UsageError("lambda must be 0 in mask mode");
  if (train.dims() != net.input_dim()) {
    throw ShapeError("training data has " + std::to_string(train.dims()) + " inputs, network expects " +
                     std::to_string(net.input_dim()));
  }
  if (train.rows() == 0) throw ShapeError("empty training set");

  TrainingHistory history;
  history.initial = evaluate_loss(net, train, lambda, config.eval_batch);

  AdamState adam = AdamState::for_network(net);
  BatchIterator batches(train, config.train_batch, batch_seed);
  Batch batch;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    const double lr = lr_at_epoch(config.lr_schedule, epoch);
    batches.start_epoch(epoch);
    EpochRecord record;
    record.epoch = epoch;
    record.lr = lr;
    std::size_t seen = 0;
    std::size_t b = 0;
    while (batches.next(batch)) {
      BackwardResult step;
      try {
        step = backward(net, batch.inputs, batch.targets, lambda);
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(epoch) + ", batch " + std::to_string(b) + ": " +
                           e.what());
      }
      if (!std::isfinite(step.loss.total)) {
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(b));
      }
      const auto n = static_cast<double>(batch.targets.size());
      record.train.mse += step.loss.mse * n;
      record.train.l1_penalty += step.loss.l1_penalty * n;
      seen += batch.targets.size();
      adam_step(adam, net, step.gradients, lr);
      ++b;
    }
    record.train.mse /= static_cast<double>(seen);
    record.train.l1_penalty /= static_cast<double>(seen);
    record.train.total = record.train.mse + record.train.l1_penalty;
    if (validation) record.val_mse = evaluate_loss(net, *validation, 0.0, config.eval_batch).mse;
    history.epochs.push_back(record);
  }
  history.final = evaluate_loss(net, train, lambda, config.eval_batch);
  if (!std::isfinite(history.final.total)) throw NumericError("non-finite final training loss");
  return history;
}

TrainedNetwork train_premask(const Dataset& train, const TrainingConfig& config,
                             const Dataset* validation) {
  config.validate();
  TrainedNetwork out{make_premask_network(config.architecture(train.dims()), config.seed), {}};
  out.history = train_network(out.network, train, config, config.epochs_premask, config.lambda,
                              derive_seed(config.seed, stream::kPremaskBatches), validation);
  return out;
}

MaskVector extract_mask_vector(const Network& premask) {
  if (premask.mode != Mode::kPreMask || !premask.input_kernel) {
    throw UsageError("mask vector extraction requires a pre-mask network");
  }
  const auto& w = premask.input_kernel->weights;
  MaskVector m;
  m.values.resize(static_cast<std::size_t>(w.cols()));
  for (Index j = 0; j < w.cols(); ++j) m.values[static_cast<std::size_t>(j)] = w.col(j).norm();
  return m;
}

TrainedNetwork train_mask(const Network& premask, const BinaryMask& mask, const Dataset& train,
                          const TrainingConfig& config, const Dataset* validation) {
  TrainedNetwork out{to_mask_network(premask, mask), {}};
  out.history = train_network(out.network, train, config, config.epochs_mask, 0.0,
                              derive_seed(config.seed, stream::kMaskBatches), validation);
  if (mask.selected_count() == 0) {
    out.history.warnings.push_back("all-zero mask: the network sees only its biases");
  }
  return out;
}

SweepResult sweep_thresholds(const Network& premask, const Dataset& train,
                             const TrainingConfig& config, const Dataset* validation) {
  const MaskVector m = extract_mask_vector(premask);
  const ThresholdGrid grid = build_threshold_grid(m, config.n_thresholds);
  return sweep_thresholds(premask, m, grid, train, config, validation);
}

SweepResult sweep_thresholds(const Network& premask, const MaskVector& m, const ThresholdGrid& grid,
                             const Dataset& train, const TrainingConfig& config,
                             const Dataset* validation) {
  config.validate();
  if (grid.thresholds.empty()) throw DegenerateGridError("threshold grid is empty");
  SweepResult sweep;
  sweep.mask_vector = m;
  sweep.grid = grid;
  sweep.records.resize(grid.thresholds.size());

  auto run_one = [&](std::size_t i) {
    SweepRecord& rec = sweep.records[i];
    rec.threshold = grid.thresholds[i];
    rec.mask = binarize(m, rec.threshold);
    rec.selected_count = rec.mask.selected_count();
    try {
      TrainedNetwork trained = train_mask(premask, rec.mask, train, config, validation);
      rec.final_train_loss = trained.history.final.total;
      if (validation) rec.final_val_loss = evaluate_loss(trained.network, *validation, 0.0, config.eval_batch).mse;
      rec.network = std::move(trained.network);
      rec.history = std::move(trained.history);
    } catch (const Error& e) {
      rec.final_train_loss = std::numeric_limits<double>::quiet_NaN();
      rec.error = std::string(error_code_name(e.code())) + ": " + e.what();
    }
  };

  const std::size_t workers = std::min(config.jobs, sweep.records.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < sweep.records.size(); ++i) run_one(i);
    return sweep;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < sweep.records.size(); i = next++) run_one(i);
    });
  }
  for (auto& t : pool) t.join();
  return sweep;
}

Selection select_best(const SweepResult& sweep) {
  if (sweep.records.empty()) throw UsageError("cannot select from an empty sweep");
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < sweep.records.size(); ++i) {
    const auto& rec = sweep.records[i];
    if (rec.error || !std::isfinite(rec.final_train_loss)) continue;
    if (!best) {
      best = i;
      continue;
    }
    const auto& cur = sweep.records[*best];
    if (rec.final_train_loss < cur.final_train_loss ||
        (rec.final_train_loss == cur.final_train_loss && rec.threshold > cur.threshold)) {
      best = i;
    }
  }
  if (!best) throw NumericError("every threshold run in the sweep failed");
  const auto& rec = sweep.records[*best];
  return Selection{*best, rec.threshold, &rec.network};
}

void save_sweep_csv(const std::filesystem::path& path, const SweepResult& sweep) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "threshold,selected_count,final_train_loss,final_val_loss,bits,error\n";
  for (const auto& rec : sweep.records) {
    std::string bits;
    for (auto b : rec.mask.bits) bits += b ? '1' : '0';
    out << format_fixed(rec.threshold) << ',' << rec.selected_count << ','
        << (std::isfinite(rec.final_train_loss) ? format_real(rec.final_train_loss) : "nan") << ','
        << (rec.final_val_loss ? format_real(*rec.final_val_loss) : "") << ',' << bits << ','
        << (rec.error ? "\"" + *rec.error + "\"" : "") << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace pcm
