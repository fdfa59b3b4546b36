#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace activemocap::csv {

// Shortest decimal string that parses back to exactly `v`.
std::string format_double(double v);

double parse_double(std::string_view s);
long long parse_int(std::string_view s);

std::vector<std::string_view> split(std::string_view line, char sep = ',');

}  // namespace activemocap::csv
