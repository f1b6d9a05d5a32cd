#include "pcm/metrics.hpp"

#include <map>

#include "pcm/error.hpp"

namespace pcm {
namespace {

std::optional<double> r2_value(double ss_res, double ss_tot) {
  if (!(ss_tot > 0.0)) return std::nullopt;
  return 1.0 - ss_res / ss_tot;
}

}  // namespace

R2Report r2(const Vector& predictions, const Vector& targets, std::string target_name) {
  if (predictions.size() != targets.size()) throw ShapeError("predictions and targets differ in length");
  if (targets.size() < 2) throw UsageError("R^2 needs at least two samples");
  const double n = static_cast<double>(targets.size());
  const double mean = targets.mean();
  const double ss_res = (targets - predictions).squaredNorm();
  const double ss_tot = (targets.array() - mean).square().sum();
  R2Report report;
  report.r2 = r2_value(ss_res, ss_tot);
  report.mse = ss_res / n;
  report.n = static_cast<std::size_t>(targets.size());
  report.target_name = std::move(target_name);
  return report;
}

ProfileReport profile_report(const Vector& predictions, const Vector& targets,
                             const std::vector<std::int64_t>& group_ids) {
  if (predictions.size() != targets.size()) throw ShapeError("predictions and targets differ in length");
  if (group_ids.size() != static_cast<std::size_t>(targets.size())) {
    throw ShapeError("group ids do not cover every sample");
  }
  std::map<std::int64_t, std::vector<Index>> members;
  for (std::size_t i = 0; i < group_ids.size(); ++i) members[group_ids[i]].push_back(static_cast<Index>(i));

  ProfileReport report;
  for (const auto& [group, rows] : members) {
    GroupProfile g;
    g.group = group;
    g.n = rows.size();
    double sum_pred = 0.0;
    double sum_truth = 0.0;
    for (Index r : rows) {
      sum_pred += predictions[r];
      sum_truth += targets[r];
    }
    g.mean_prediction = sum_pred / static_cast<double>(g.n);
    g.mean_truth = sum_truth / static_cast<double>(g.n);
    double ss_res = 0.0;
    double ss_tot = 0.0;
    for (Index r : rows) {
      ss_res += (targets[r] - predictions[r]) * (targets[r] - predictions[r]);
      ss_tot += (targets[r] - g.mean_truth) * (targets[r] - g.mean_truth);
    }
    g.r2 = r2_value(ss_res, ss_tot);
    report.groups.push_back(g);
  }
  return report;
}

}  // namespace pcm
