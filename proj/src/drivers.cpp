#include "pcm/drivers.hpp"

#include <algorithm>
#include <map>

#include "pcm/error.hpp"

namespace pcm {

DriverRecoveryReport driver_recovery(const BinaryMask& selected, std::vector<std::size_t> truth) {
  std::sort(truth.begin(), truth.end());
  truth.erase(std::unique(truth.begin(), truth.end()), truth.end());
  DriverRecoveryReport report;
  report.selected = selected.selected_indices();
  report.truth = truth;
  for (auto j : report.selected) {
    if (std::binary_search(truth.begin(), truth.end(), j)) ++report.true_positives;
  }
  const auto tp = static_cast<double>(report.true_positives);
  if (!report.selected.empty()) report.precision = tp / static_cast<double>(report.selected.size());
  if (!truth.empty()) report.recall = tp / static_cast<double>(truth.size());
  return report;
}

OverlapReport compare_masks(const BinaryMask& a, const BinaryMask& b,
                            const std::vector<std::int64_t>* grouping) {
  if (a.size() != b.size()) {
    throw ShapeError("masks differ in length (" + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()) + ")");
  }
  if (grouping && grouping->size() != a.size()) throw ShapeError("grouping does not cover every input");

  std::map<std::int64_t, GroupOverlap> groups;
  OverlapReport report;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const bool in_a = a.bits[j] != 0;
    const bool in_b = b.bits[j] != 0;
    if (!in_a && !in_b) continue;
    const std::int64_t g = grouping ? (*grouping)[j] : static_cast<std::int64_t>(j);
    auto& entry = groups[g];
    entry.group = g;
    if (in_a && in_b) {
      entry.both.push_back(j);
      ++report.both;
    } else if (in_a) {
      entry.only_a.push_back(j);
      ++report.only_a;
    } else {
      entry.only_b.push_back(j);
      ++report.only_b;
    }
  }
  for (auto& [g, entry] : groups) report.groups.push_back(std::move(entry));
  const std::size_t uni = report.only_a + report.only_b + report.both;
  if (uni > 0) report.jaccard = static_cast<double>(report.both) / static_cast<double>(uni);
  return report;
}

std::vector<std::int64_t> level_grouping(std::size_t d, std::size_t levels) {
  if (levels == 0 || d % levels != 0) throw UsageError("levels must divide the input dimension");
  std::vector<std::int64_t> out(d);
  for (std::size_t j = 0; j < d; ++j) out[j] = static_cast<std::int64_t>(j % levels);
  return out;
}

BinaryMask translate_levels(const BinaryMask& mask, std::size_t levels, int delta) {
  if (levels == 0 || mask.size() % levels != 0) throw UsageError("levels must divide the mask length");
  BinaryMask out{std::vector<std::uint8_t>(mask.size(), 0), mask.threshold};
  for (std::size_t j = 0; j < mask.size(); ++j) {
    if (!mask.bits[j]) continue;
    const long level = static_cast<long>(j % levels) + delta;
    if (level < 0 || level >= static_cast<long>(levels)) continue;
    out.bits[j - j % levels + static_cast<std::size_t>(level)] = 1;
  }
  return out;
}

}  // namespace pcm
