#include "pcm/text.hpp"

#include <charconv>
#include <cmath>

#include "pcm/error.hpp"

namespace pcm {

std::string format_real(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::string format_fixed(double value) {
  char buf[400];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::fixed);
  return std::string(buf, res.ptr);
}

double parse_real(std::string_view field, std::size_t line) {
  field = trim(field);
  if (field.empty()) throw ParseError("empty numeric field", line);
  const char* first = field.data();
  if (*first == '+') ++first;
  double value = 0.0;
  const auto res = std::from_chars(first, field.data() + field.size(), value);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw ParseError("not a number: \"" + std::string(field) + "\"", line);
  }
  if (!std::isfinite(value)) {
    throw ParseError("non-finite value: \"" + std::string(field) + "\"", line);
  }
  return value;
}

std::int64_t parse_integer(std::string_view field, std::size_t line) {
  field = trim(field);
  std::int64_t value = 0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
  if (field.empty() || res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw ParseError("not an integer: \"" + std::string(field) + "\"", line);
  }
  return value;
}

std::size_t parse_count(std::string_view field, std::size_t line) {
  const auto value = parse_integer(field, line);
  if (value < 0) throw ParseError("expected a non-negative count", line);
  return static_cast<std::size_t>(value);
}

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.emplace_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string> split_whitespace(std::string_view s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    const std::size_t start = i;
    while (i < s.size() && !is_space(s[i])) ++i;
    if (i > start) out.emplace_back(s.substr(start, i - start));
  }
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace pcm
