#include "lexdrift/tokenize.hpp"

#include <json.hpp>
#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include <stdexcept>

#include "lexdrift/error.hpp"
#include "lexdrift/unicode.hpp"

namespace lexdrift {
namespace {

bool is_mark(UChar32 c) {
  const auto cat = u_charType(c);
  return cat == U_NON_SPACING_MARK || cat == U_COMBINING_SPACING_MARK ||
         cat == U_ENCLOSING_MARK;
}

bool is_punctuation(UChar32 c) { return (U_GET_GC_MASK(c) & U_GC_P_MASK) != 0; }

}  // namespace

void TokenRules::validate() const {
  if (min_token_length < 1) throw std::invalid_argument("min_token_length must be >= 1");
  for (const auto& [variant, canonical] : variant_merges) {
    auto it = variant_merges.find(canonical);
    if (it != variant_merges.end() && it->second != canonical) {
      throw std::invalid_argument("variant merge '" + variant + "' -> '" + canonical +
                                  "' is not idempotent: '" + canonical + "' maps to '" +
                                  it->second + "'");
    }
  }
}

TokenRules parse_token_rules(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("token rules: ") + e.what());
  }
  if (!j.is_object()) throw DataError("token rules: expected a JSON object");
  TokenRules rules;
  try {
    if (j.contains("lowercase")) rules.lowercase = j.at("lowercase").get<bool>();
    if (j.contains("strip_punctuation")) {
      rules.strip_punctuation = j.at("strip_punctuation").get<bool>();
    }
    if (j.contains("min_token_length")) {
      rules.min_token_length = j.at("min_token_length").get<int>();
    }
    if (j.contains("variant_merges")) {
      rules.variant_merges = j.at("variant_merges").get<std::map<std::string, std::string>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("token rules: ") + e.what());
  }
  try {
    rules.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("token rules: ") + e.what());
  }
  return rules;
}

std::string dump_token_rules(const TokenRules& rules) {
  nlohmann::ordered_json j;
  j["lowercase"] = rules.lowercase;
  j["strip_punctuation"] = rules.strip_punctuation;
  j["min_token_length"] = rules.min_token_length;
  j["variant_merges"] = rules.variant_merges;
  return j.dump();
}

std::vector<std::string> tokenize(std::string_view text, const TokenRules& rules) {
  std::vector<std::string> tokens;
  const auto* p = reinterpret_cast<const uint8_t*>(text.data());
  const int32_t n = static_cast<int32_t>(text.size());

  auto emit = [&](std::string_view raw) {
    std::string token = rules.lowercase ? unicode::to_lower(raw) : std::string(raw);
    if (auto it = rules.variant_merges.find(token); it != rules.variant_merges.end()) {
      token = it->second;
    }
    if (unicode::code_point_count(token) < static_cast<std::size_t>(rules.min_token_length)) {
      return;
    }
    tokens.push_back(std::move(token));
  };

  int32_t i = 0;
  int32_t run_start = -1;
  while (i < n) {
    const int32_t start = i;
    UChar32 c;
    U8_NEXT(p, i, n, c);
    const bool letter = c >= 0 && (u_isalpha(c) || (run_start >= 0 && is_mark(c)));
    if (letter) {
      if (run_start < 0) run_start = start;
      continue;
    }
    if (run_start >= 0) {
      emit(text.substr(run_start, start - run_start));
      run_start = -1;
    }
    if (!rules.strip_punctuation && c >= 0 && is_punctuation(c)) {
      emit(text.substr(start, i - start));
    }
  }
  if (run_start >= 0) emit(text.substr(run_start));
  return tokens;
}

}  // namespace lexdrift
