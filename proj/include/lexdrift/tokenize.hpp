#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace lexdrift {

struct TokenRules {
  bool lowercase = true;
  bool strip_punctuation = true;
  /// Spelling variant -> canonical form, applied after lowercasing.
  std::map<std::string, std::string> variant_merges{{"ok", "okay"}};
  int min_token_length = 1;

  /// Throws std::invalid_argument when the merges are not idempotent or the
  /// minimum length is below 1.
  void validate() const;
  bool operator==(const TokenRules&) const = default;
};

/// Reads rules from a JSON object. Missing keys keep their defaults.
TokenRules parse_token_rules(std::string_view json_text);
std::string dump_token_rules(const TokenRules& rules);

/// Splits on anything that is not a Unicode letter (combining marks stay
/// attached to the preceding letter). With strip_punctuation off, each
/// punctuation character is kept as a token of its own.
std::vector<std::string> tokenize(std::string_view text, const TokenRules& rules);

}  // namespace lexdrift
