#include "lexdrift/latex.hpp"

#include <algorithm>
#include <array>
#include <optional>

namespace lexdrift {
namespace {

constexpr std::array<std::string_view, 3> kUnwrap{"textit", "emph", "textbf"};
constexpr std::array<std::string_view, 3> kDelete{"cite", "citep", "citet"};

bool is_ascii_letter(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

template <std::size_t N>
bool contains(const std::array<std::string_view, N>& set, std::string_view name) {
  for (auto s : set) {
    if (s == name) return true;
  }
  return false;
}

// Index one past the brace closing the group opened at `open`, or nullopt.
std::optional<std::size_t> match_brace(std::string_view s, std::size_t open, char lhs, char rhs) {
  int depth = 0;
  for (std::size_t i = open; i < s.size(); ++i) {
    if (s[i] == '\\') {
      ++i;
      continue;
    }
    if (s[i] == lhs) ++depth;
    if (s[i] == rhs && --depth == 0) return i + 1;
  }
  return std::nullopt;
}

// nullopt when a handled command is left unterminated.
std::optional<std::string> strip(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] != '\\') {
      out.push_back(text[i++]);
      continue;
    }
    std::size_t j = i + 1;
    while (j < text.size() && is_ascii_letter(text[j])) ++j;
    const std::string_view name = text.substr(i + 1, j - i - 1);
    const bool unwrap = contains(kUnwrap, name);
    const bool drop = contains(kDelete, name);
    if (!unwrap && !drop) {
      // Copy the command (or escaped character) untouched.
      const std::size_t end = name.empty() ? std::min(i + 2, text.size()) : j;
      out.append(text.substr(i, end - i));
      i = end;
      continue;
    }
    std::size_t arg = j;
    if (drop && arg < text.size() && text[arg] == '[') {
      auto close = match_brace(text, arg, '[', ']');
      if (!close) return std::nullopt;
      arg = *close;
    }
    if (arg >= text.size() || text[arg] != '{') {
      out.append(text.substr(i, arg - i));
      i = arg;
      continue;
    }
    auto close = match_brace(text, arg, '{', '}');
    if (!close) return std::nullopt;
    if (unwrap) {
      auto inner = strip(text.substr(arg + 1, *close - arg - 2));
      if (!inner) return std::nullopt;
      out += *inner;
    }
    i = *close;
  }
  return out;
}

}  // namespace

LatexStripResult strip_latex_artifacts(std::string_view text) {
  LatexStripResult result;
  if (text.find('\\') == std::string_view::npos) {
    result.text.assign(text);
    return result;
  }
  if (auto stripped = strip(text)) {
    result.text = std::move(*stripped);
  } else {
    result.text.assign(text);
    result.warnings.emplace_back("unbalanced braces in LaTeX markup; text left unchanged");
  }
  return result;
}

}  // namespace lexdrift
