#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace calcio::csv {

/// Splits one RFC 4180 record (double-quoted fields may contain commas and "").
std::vector<std::string> split(std::string_view line);

/// Quotes a field when it contains a comma, quote or newline.
std::string escape(std::string_view field);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace calcio::csv
