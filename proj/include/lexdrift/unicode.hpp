#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace lexdrift::unicode {

bool is_valid_utf8(std::string_view s);
std::size_t code_point_count(std::string_view s);
std::string to_lower(std::string_view s);

/// Collapses runs of Unicode whitespace into one ASCII space and trims.
std::string collapse_whitespace(std::string_view s);

/// Fraction of letters that belong to the Latin script; 0 when there are none.
double latin_letter_fraction(std::string_view s);

}  // namespace lexdrift::unicode
