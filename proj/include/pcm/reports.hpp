#ifndef PCM_REPORTS_HPP_
#define PCM_REPORTS_HPP_

#include <filesystem>

#include "json.hpp"
#include "pcm/drivers.hpp"
#include "pcm/metrics.hpp"
#include "pcm/protocol.hpp"
#include "pcm/shapley.hpp"

// Plot-ready CSV and JSON summaries. Undefined quantities are written as
// empty CSV cells and JSON null.
namespace pcm {

using Json = nlohmann::ordered_json;

Json to_json(const R2Report& report);
Json to_json(const ProfileReport& report);
Json to_json(const DriverRecoveryReport& report);
Json to_json(const OverlapReport& report);
Json to_json(const AttributionMatrix& matrix);
Json to_json(const TrainingConfig& config);

void save_json(const std::filesystem::path& path, const Json& json);

// output,<input names...>
void save_attribution_csv(const std::filesystem::path& path, const AttributionMatrix& matrix);
// group,n,mean_prediction,mean_truth,r2
void save_profile_csv(const std::filesystem::path& path, const ProfileReport& report);
// group,only_a,only_b,both,only_a_indices,only_b_indices,both_indices
void save_overlap_csv(const std::filesystem::path& path, const OverlapReport& report);
// epoch,lr,train_mse,train_l1_penalty,train_total,val_mse
void save_history_csv(const std::filesystem::path& path, const TrainingHistory& history);

}  // namespace pcm

#endif  // PCM_REPORTS_HPP_
