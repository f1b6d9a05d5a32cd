#include "pcm/reports.hpp"

#include <fstream>

#include "pcm/error.hpp"
#include "pcm/text.hpp"

namespace pcm {
namespace {

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::string optional_cell(const std::optional<double>& v) { return v ? format_real(*v) : ""; }

std::string index_list(const std::vector<std::size_t>& idx) {
  std::string out;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(idx[i]);
  }
  return out;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

}  // namespace

Json to_json(const R2Report& report) {
  return Json{{"target", report.target_name},
              {"r2", optional_json(report.r2)},
              {"r2_defined", report.defined()},
              {"mse", report.mse},
              {"n", report.n}};
}

Json to_json(const ProfileReport& report) {
  Json groups = Json::array();
  for (const auto& g : report.groups) {
    groups.push_back(Json{{"group", g.group},
                          {"n", g.n},
                          {"mean_prediction", g.mean_prediction},
                          {"mean_truth", g.mean_truth},
                          {"r2", optional_json(g.r2)}});
  }
  return Json{{"groups", groups}};
}

Json to_json(const DriverRecoveryReport& report) {
  return Json{{"precision", optional_json(report.precision)},
              {"precision_defined", report.precision.has_value()},
              {"recall", optional_json(report.recall)},
              {"recall_defined", report.recall.has_value()},
              {"true_positives", report.true_positives},
              {"selected", report.selected},
              {"truth", report.truth}};
}

Json to_json(const OverlapReport& report) {
  Json groups = Json::array();
  for (const auto& g : report.groups) {
    groups.push_back(Json{{"group", g.group}, {"only_a", g.only_a}, {"only_b", g.only_b}, {"both", g.both}});
  }
  return Json{{"jaccard", optional_json(report.jaccard)},
              {"only_a", report.only_a},
              {"only_b", report.only_b},
              {"both", report.both},
              {"groups", groups}};
}

Json to_json(const AttributionMatrix& matrix) {
  Json rows = Json::array();
  for (Index r = 0; r < matrix.values.rows(); ++r) {
    Json row = Json::object();
    row["output"] = matrix.output_names.at(static_cast<std::size_t>(r));
    Json values = Json::object();
    for (Index c = 0; c < matrix.values.cols(); ++c) {
      values[matrix.input_names.at(static_cast<std::size_t>(c))] = matrix.values(r, c);
    }
    row["mean_abs_attribution"] = values;
    rows.push_back(row);
  }
  return Json{{"sample_count", matrix.sample_count},
              {"baseline", matrix.baseline},
              {"units", matrix.physical_units ? "physical" : "normalized"},
              {"rows", rows}};
}

Json to_json(const TrainingConfig& config) {
  return Json{{"lambda", config.lambda},
              {"epochs_premask", config.epochs_premask},
              {"epochs_mask", config.epochs_mask},
              {"initial_lr", config.lr_schedule.initial_lr},
              {"lr_decay_factor", config.lr_schedule.decay_factor},
              {"lr_decay_every", config.lr_schedule.decay_every},
              {"train_batch", config.train_batch},
              {"eval_batch", config.eval_batch},
              {"seed", config.seed},
              {"n_thresholds", config.n_thresholds},
              {"hidden", config.hidden_widths},
              {"negative_slope", config.negative_slope}};
}

void save_json(const std::filesystem::path& path, const Json& json) {
  auto out = open_for_write(path);
  out << json.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

void save_attribution_csv(const std::filesystem::path& path, const AttributionMatrix& matrix) {
  auto out = open_for_write(path);
  out << "output";
  for (const auto& name : matrix.input_names) out << ',' << name;
  out << '\n';
  for (Index r = 0; r < matrix.values.rows(); ++r) {
    out << matrix.output_names.at(static_cast<std::size_t>(r));
    for (Index c = 0; c < matrix.values.cols(); ++c) out << ',' << format_real(matrix.values(r, c));
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

void save_profile_csv(const std::filesystem::path& path, const ProfileReport& report) {
  auto out = open_for_write(path);
  out << "group,n,mean_prediction,mean_truth,r2\n";
  for (const auto& g : report.groups) {
    out << g.group << ',' << g.n << ',' << format_real(g.mean_prediction) << ','
        << format_real(g.mean_truth) << ',' << optional_cell(g.r2) << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

void save_overlap_csv(const std::filesystem::path& path, const OverlapReport& report) {
  auto out = open_for_write(path);
  out << "group,only_a,only_b,both,only_a_indices,only_b_indices,both_indices\n";
  for (const auto& g : report.groups) {
    out << g.group << ',' << g.only_a.size() << ',' << g.only_b.size() << ',' << g.both.size() << ','
        << index_list(g.only_a) << ',' << index_list(g.only_b) << ',' << index_list(g.both) << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

void save_history_csv(const std::filesystem::path& path, const TrainingHistory& history) {
  auto out = open_for_write(path);
  out << "epoch,lr,train_mse,train_l1_penalty,train_total,val_mse\n";
  for (const auto& e : history.epochs) {
    out << e.epoch << ',' << format_real(e.lr) << ',' << format_real(e.train.mse) << ','
        << format_real(e.train.l1_penalty) << ',' << format_real(e.train.total) << ','
        << optional_cell(e.val_mse) << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace pcm
