#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace mobent::csv {

// Minimal comma-separated parsing for the toolkit's fixed-schema files.
// None of the contracts use quoting or escaping, so neither does this.

/// Splits one line on commas. Empty fields are preserved.
std::vector<std::string_view> split(std::string_view line);

/// Strips a trailing '\r' in place (files written on Windows).
void strip_cr(std::string& line);

double to_double(std::string_view field, std::size_t line_no, std::string_view what);
std::int64_t to_int64(std::string_view field, std::size_t line_no, std::string_view what);

/// Small non-negative coded integer (factor levels, flags).
int to_code(std::string_view field, std::size_t line_no, std::string_view what);

/// Fixed-point formatting with `decimals` fractional digits ('.' separator,
/// locale independent). Used wherever a file contract pins the digit count.
std::string fixed(double v, int decimals);

/// Shortest representation that round-trips the double exactly.
std::string exact(double v);

} // namespace mobent::csv
