#ifndef PCM_TEXT_HPP_
#define PCM_TEXT_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

// Small strict text helpers shared by the file formats.
namespace pcm {

// Shortest round-trip decimal representation.
std::string format_real(double value);

// Shortest round-trip decimal without an exponent (thresholds, rates).
std::string format_fixed(double value);

// Strict float syntax: the whole field must parse and be finite.
// NaN/Inf spellings are rejected. `line` is used in error messages.
double parse_real(std::string_view field, std::size_t line = 0);
std::size_t parse_count(std::string_view field, std::size_t line = 0);
std::int64_t parse_integer(std::string_view field, std::size_t line = 0);

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::vector<std::string> split_whitespace(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace pcm

#endif  // PCM_TEXT_HPP_
