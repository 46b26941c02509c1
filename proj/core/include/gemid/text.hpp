#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace gemid {

std::string_view trim(std::string_view s);

/// Splits one CSV line; honours double-quoted cells with "" escapes.
std::vector<std::string> split_csv_line(std::string_view line);

/// Quotes a cell only when it contains a comma, quote or newline.
std::string csv_cell(std::string_view s);

/// Shortest text that parses back to exactly `v`. NaN renders as "".
std::string format_double(double v);

/// Inverse of format_double; "" parses as NaN. Throws InputError.
double parse_double(std::string_view s);

/// Fixed-precision rendering for human-facing tables.
std::string format_fixed(double v, int decimals);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace gemid
