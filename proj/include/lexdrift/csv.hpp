#pragma once

#include <initializer_list>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace lexdrift::csv {

/// Shortest decimal text that parses back to the same double.
std::string format_number(double value);
/// Throws DataError on anything that is not a complete number.
double parse_number(std::string_view text);
long long parse_integer(std::string_view text);

std::string escape(std::string_view field);
void write_row(std::ostream& out, std::initializer_list<std::string_view> fields);
void write_row(std::ostream& out, const std::vector<std::string>& fields);

/// RFC 4180 reader (quoted fields, doubled quotes, CRLF tolerated).
std::vector<std::vector<std::string>> read(std::istream& in);

/// Reads a CSV and checks its header row; returns the data rows.
std::vector<std::vector<std::string>> read_with_header(
    std::istream& in, const std::vector<std::string>& expected_header);

}  // namespace lexdrift::csv
