#pragma once

#include <cstddef>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lexdrift/corpus.hpp"
#include "lexdrift/tokenize.hpp"

namespace lexdrift {

/// Word counts plus their total. Counts are real-valued so that rescaled
/// tables share the type.
class FrequencyTable {
 public:
  using Counts = std::map<std::string, double, std::less<>>;

  FrequencyTable() = default;

  /// Total is the sum of the counts. Throws DataError on a negative count.
  static FrequencyTable from_counts(Counts counts);

  double count(std::string_view word) const;
  double total() const { return total_; }
  const Counts& counts() const { return counts_; }
  std::size_t size() const { return counts_.size(); }
  bool empty() const { return counts_.empty(); }

  void add(std::string_view word, double amount);

  /// Overrides the stored total; used when a rescale pins the total exactly.
  void set_total(double total) { total_ = total; }

 private:
  Counts counts_;
  double total_ = 0.0;
};

FrequencyTable count_frequencies(const Corpus& corpus, const TokenRules& rules);
FrequencyTable count_document(const Document& doc, const TokenRules& rules);

FrequencyTable merge(std::span<const FrequencyTable> tables);

FrequencyTable scaled(const FrequencyTable& table, double factor);

/// Throws DataError("cannot normalize empty table") when the total is zero.
FrequencyTable normalize_to_total(const FrequencyTable& table, double reference_total);

struct RankedWord {
  std::string word;
  std::size_t rank = 0;
  bool operator==(const RankedWord&) const = default;
};

/// Descending count, ties broken by spelling; ranks start at 1.
class Ranking {
 public:
  Ranking() = default;
  Ranking(std::string label, std::vector<RankedWord> entries);

  const std::string& label() const { return label_; }
  std::span<const RankedWord> entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  std::optional<std::size_t> rank_of(std::string_view word) const;
  /// rank is 1-based; throws std::out_of_range.
  const std::string& word_at(std::size_t rank) const;

 private:
  std::string label_;
  std::vector<RankedWord> entries_;
  std::unordered_map<std::string, std::size_t> lookup_;
};

Ranking rank_words(const FrequencyTable& table, std::string label = "ranking");

/// CSV with header `word,count` and a final `#total,<total>` row.
void write_frequency_csv(const FrequencyTable& table, std::ostream& out);
FrequencyTable read_frequency_csv(std::istream& in);

/// TSV lines `word<TAB>rank`, no header.
void write_ranking_tsv(const Ranking& ranking, std::ostream& out);
Ranking read_ranking_tsv(std::istream& in, std::string label = "ranking");

}  // namespace lexdrift
