#ifndef PCM_METRICS_HPP_
#define PCM_METRICS_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pcm/types.hpp"

namespace pcm {

struct R2Report {
  std::optional<double> r2;  // empty when the targets have zero variance
  double mse = 0.0;
  std::size_t n = 0;
  std::string target_name;

  bool defined() const noexcept { return r2.has_value(); }
};

// r2 = 1 - sum (y - yhat)^2 / sum (y - mean y)^2. May be negative.
R2Report r2(const Vector& predictions, const Vector& targets, std::string target_name = "y");

struct GroupProfile {
  std::int64_t group = 0;
  std::size_t n = 0;
  double mean_prediction = 0.0;
  double mean_truth = 0.0;
  std::optional<double> r2;  // empty when undefined within the group
};

struct ProfileReport {
  std::vector<GroupProfile> groups;  // ascending group id
};

// Per-group means and R^2. group_ids must have one entry per sample.
ProfileReport profile_report(const Vector& predictions, const Vector& targets,
                             const std::vector<std::int64_t>& group_ids);

}  // namespace pcm

#endif  // PCM_METRICS_HPP_
