#include "lexdrift/vtt.hpp"

#include <array>
#include <iterator>
#include <utility>
#include <vector>

#include "lexdrift/error.hpp"
#include "lexdrift/unicode.hpp"

namespace lexdrift {
namespace {

std::vector<std::string_view> split_lines(std::string_view s) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\n' || s[i] == '\r') {
      lines.push_back(s.substr(start, i - start));
      if (s[i] == '\r' && i + 1 < s.size() && s[i + 1] == '\n') ++i;
      start = i + 1;
    }
  }
  if (start < s.size()) lines.push_back(s.substr(start));
  return lines;
}

bool is_blank(std::string_view line) {
  return line.find_first_not_of(" \t") == std::string_view::npos;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

// [hh:]mm:ss.ttt with hours of two or more digits.
bool is_timestamp(std::string_view s) {
  const auto dot = s.rfind('.');
  if (dot == std::string_view::npos || s.size() - dot - 1 != 3 || !all_digits(s.substr(dot + 1))) {
    return false;
  }
  std::string_view clock = s.substr(0, dot);
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= clock.size(); ++i) {
    if (i == clock.size() || clock[i] == ':') {
      parts.push_back(clock.substr(start, i - start));
      start = i + 1;
    }
  }
  if (parts.size() != 2 && parts.size() != 3) return false;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (!all_digits(parts[i])) return false;
    const bool hours = parts.size() == 3 && i == 0;
    if (hours ? parts[i].size() < 2 : parts[i].size() != 2) return false;
    if (!hours && (parts[i][0] - '0') > 5) return false;
  }
  return true;
}

bool is_timing_line(std::string_view line) {
  const auto arrow = line.find("-->");
  if (arrow == std::string_view::npos) return false;
  const auto start = trim(line.substr(0, arrow));
  auto rest = trim(line.substr(arrow + 3));
  const auto end = rest.substr(0, rest.find_first_of(" \t"));
  return is_timestamp(start) && is_timestamp(end);
}

std::string strip_tags_and_entities(std::string_view payload) {
  static constexpr std::array<std::pair<std::string_view, std::string_view>, 6> kEntities{{
      {"&amp;", "&"},
      {"&lt;", "<"},
      {"&gt;", ">"},
      {"&nbsp;", " "},
      {"&quot;", "\""},
      {"&apos;", "'"},
  }};
  std::string out;
  out.reserve(payload.size());
  for (std::size_t i = 0; i < payload.size();) {
    if (payload[i] == '<') {
      const auto close = payload.find('>', i);
      if (close != std::string_view::npos) {
        i = close + 1;
        continue;
      }
    }
    if (payload[i] == '&') {
      bool replaced = false;
      for (const auto& [entity, text] : kEntities) {
        if (payload.substr(i, entity.size()) == entity) {
          out += text;
          i += entity.size();
          replaced = true;
          break;
        }
      }
      if (replaced) continue;
    }
    out.push_back(payload[i++]);
  }
  return out;
}

bool starts_with_words(std::string_view text, std::string_view prefix) {
  if (prefix.empty() || !text.starts_with(prefix)) return false;
  return text.size() == prefix.size() || text[prefix.size()] == ' ';
}

}  // namespace

std::string parse_vtt(std::string_view source) {
  if (source.starts_with("\xEF\xBB\xBF")) source.remove_prefix(3);
  const auto lines = split_lines(source);
  if (lines.empty() || !lines[0].starts_with("WEBVTT") ||
      (lines[0].size() > 6 && lines[0][6] != ' ' && lines[0][6] != '\t')) {
    throw DataError("missing WEBVTT header");
  }

  // Header block runs to the first blank line.
  std::size_t i = 1;
  while (i < lines.size() && !is_blank(lines[i])) ++i;

  std::string transcript;
  std::string previous;
  std::size_t cue_index = 0;

  auto append = [&transcript](std::string_view piece) {
    if (piece.empty()) return;
    if (!transcript.empty()) transcript.push_back(' ');
    transcript.append(piece);
  };

  while (i < lines.size()) {
    while (i < lines.size() && is_blank(lines[i])) ++i;
    if (i >= lines.size()) break;
    std::vector<std::string_view> block;
    while (i < lines.size() && !is_blank(lines[i])) block.push_back(lines[i++]);

    const auto first = trim(block[0]);
    if (first.starts_with("NOTE") || first == "STYLE" || first == "REGION") continue;

    ++cue_index;
    std::size_t timing = 0;
    if (block[0].find("-->") == std::string_view::npos) {
      if (block.size() < 2 || block[1].find("-->") == std::string_view::npos) {
        throw DataError("cue " + std::to_string(cue_index) + ": missing timing line");
      }
      timing = 1;
    }
    if (!is_timing_line(block[timing])) {
      throw DataError("cue " + std::to_string(cue_index) + ": unparseable timing line '" +
                      std::string(block[timing]) + "'");
    }

    std::string raw;
    for (std::size_t k = timing + 1; k < block.size(); ++k) {
      if (!raw.empty()) raw.push_back(' ');
      raw.append(block[k]);
    }
    std::string payload = unicode::collapse_whitespace(strip_tags_and_entities(raw));
    if (payload.empty()) continue;

    if (starts_with_words(payload, previous)) {
      append(unicode::collapse_whitespace(std::string_view(payload).substr(previous.size())));
    } else {
      append(payload);
    }
    previous = std::move(payload);
  }
  return transcript;
}

std::string parse_vtt(std::istream& in) {
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_vtt(std::string_view(data));
}

}  // namespace lexdrift
