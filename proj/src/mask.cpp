#include "pcm/mask.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>

#include "pcm/error.hpp"
#include "pcm/text.hpp"

namespace pcm {

void MaskVector::validate() const {
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (!std::isfinite(values[j]) || values[j] < 0.0) {
      throw NumericError("mask vector entry " + std::to_string(j) +
                         " is negative or non-finite");
    }
  }
}

std::size_t BinaryMask::selected_count() const noexcept {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), 1));
}

std::vector<std::size_t> BinaryMask::selected_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < bits.size(); ++j) {
    if (bits[j]) out.push_back(j);
  }
  return out;
}

BinaryMask BinaryMask::all_ones(std::size_t d) {
  return BinaryMask{std::vector<std::uint8_t>(d, 1), 0.0};
}

BinaryMask BinaryMask::from_indices(std::size_t d, const std::vector<std::size_t>& indices) {
  BinaryMask mask{std::vector<std::uint8_t>(d, 0), 0.0};
  for (std::size_t j : indices) {
    if (j >= d) throw ShapeError("mask index " + std::to_string(j) + " out of range");
    mask.bits[j] = 1;
  }
  return mask;
}

BinaryMask binarize(const MaskVector& m, double threshold) {
  if (!(threshold >= 0.0)) throw UsageError("threshold must be >= 0");
  BinaryMask mask;
  mask.threshold = threshold;
  mask.bits.resize(m.size());
  for (std::size_t j = 0; j < m.size(); ++j) {
    // Values below the threshold are zeroed; values equal to it survive.
    mask.bits[j] = m.values[j] >= threshold ? 1 : 0;
  }
  return mask;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw UsageError("percentile of an empty vector");
  if (q < 0.0 || q > 100.0) throw UsageError("percentile rank must be in [0, 100]");
  std::sort(values.begin(), values.end());
  const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

double round_to_decimals(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::round(value * scale) / scale;
}

ThresholdGrid build_threshold_grid(const MaskVector& m, std::size_t n) {
  if (n == 0) throw UsageError("threshold count must be >= 1");
  if (m.size() == 0) throw UsageError("mask vector is empty");
  m.validate();

  ThresholdGrid grid;
  grid.requested = n;
  grid.p70 = percentile(m.values, 70.0);
  if (grid.p70 <= kGridLowerBound) {
    std::ostringstream msg;
    msg << "70th percentile of the mask vector (" << grid.p70
        << ") is not above the grid lower bound 1e-4";
    throw DegenerateGridError(msg.str());
  }

  const double step = (grid.p70 - kGridLowerBound) / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = round_to_decimals(kGridLowerBound + static_cast<double>(i) * step, 4);
    // Rounding can push the last point onto or past the open right end.
    if (t >= grid.p70) continue;
    if (!grid.thresholds.empty() && t <= grid.thresholds.back()) continue;
    grid.thresholds.push_back(t);
  }
  return grid;
}

void save_mask_file(const std::filesystem::path& path, const MaskVector& raw,
                    const BinaryMask& mask) {
  if (raw.size() != mask.size()) throw ShapeError("mask vector and binary mask differ in length");
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << raw.size() << '\n' << format_fixed(mask.threshold) << '\n';
  for (std::size_t j = 0; j < raw.size(); ++j) {
    out << format_real(raw.values[j]) << ' ' << static_cast<int>(mask.bits[j]) << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

MaskFile load_mask_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  auto next_line = [&]() -> std::string& {
    if (!std::getline(in, line)) throw ParseError("unexpected end of mask file", lineno + 1);
    ++lineno;
    return line;
  };

  const auto d = parse_count(trim(next_line()), lineno);
  MaskFile file;
  file.mask.threshold = parse_real(trim(next_line()), lineno);
  file.raw.values.reserve(d);
  file.mask.bits.reserve(d);
  for (std::size_t j = 0; j < d; ++j) {
    const auto fields = split_whitespace(next_line());
    if (fields.size() != 2) throw ParseError("expected \"raw_value bit\"", lineno);
    file.raw.values.push_back(parse_real(fields[0], lineno));
    if (fields[1] != "0" && fields[1] != "1") throw ParseError("bit must be 0 or 1", lineno);
    file.mask.bits.push_back(fields[1] == "1" ? 1 : 0);
    if ((file.raw.values.back() >= file.mask.threshold) != (file.mask.bits.back() == 1)) {
      throw ParseError("bit disagrees with raw value and threshold", lineno);
    }
  }
  while (std::getline(in, line)) {
    ++lineno;
    if (!trim(line).empty()) throw ParseError("trailing content after " + std::to_string(d) + " entries", lineno);
  }
  file.raw.validate();
  return file;
}

}  // namespace pcm
