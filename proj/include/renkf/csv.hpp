#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace renkf::csv {

/// Shortest decimal string that parses back to exactly `x`; independent of
/// the global locale. Non-finite values are written as nan, inf and -inf.
std::string format_double(double x);

double parse_double(std::string_view s);
long long parse_int(std::string_view s);
unsigned long long parse_uint(std::string_view s);

std::vector<std::string_view> split(std::string_view line, char sep = ',');

std::string_view trim(std::string_view s);

/// Splits text into lines, dropping a trailing '\r' on each.
std::vector<std::string_view> lines(std::string_view text);

}  // namespace renkf::csv
