#pragma once

#include <istream>
#include <string>
#include <string_view>

namespace lexdrift {

/// Extracts the spoken text of a WebVTT subtitle file.
///
/// Cue payloads are whitespace-normalized and joined with single spaces.
/// Inline tags (`<c>`, `<v Name>`, timestamps) are removed and the basic
/// entities decoded. Rolling captions are collapsed: when a cue's payload
/// begins with the previous cue's payload at a word boundary, only the
/// remaining suffix is appended.
///
/// Throws DataError when the WEBVTT header is missing or a timing line
/// cannot be parsed (the message names the 1-based cue index).
std::string parse_vtt(std::string_view source);
std::string parse_vtt(std::istream& in);

}  // namespace lexdrift
