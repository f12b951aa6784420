#include "lexdrift/frequency.hpp"

#include <omp.h>

#include <algorithm>
#include <stdexcept>
#include <unordered_map>

#include "lexdrift/csv.hpp"
#include "lexdrift/error.hpp"

namespace lexdrift {

FrequencyTable FrequencyTable::from_counts(Counts counts) {
  FrequencyTable t;
  for (const auto& [word, c] : counts) {
    if (c < 0) throw DataError("negative count for '" + word + "'");
    t.total_ += c;
  }
  t.counts_ = std::move(counts);
  return t;
}

double FrequencyTable::count(std::string_view word) const {
  auto it = counts_.find(word);
  return it == counts_.end() ? 0.0 : it->second;
}

void FrequencyTable::add(std::string_view word, double amount) {
  if (amount < 0) throw DataError("negative count for '" + std::string(word) + "'");
  auto it = counts_.find(word);
  if (it == counts_.end()) {
    counts_.emplace(std::string(word), amount);
  } else {
    it->second += amount;
  }
  total_ += amount;
}

FrequencyTable count_document(const Document& doc, const TokenRules& rules) {
  FrequencyTable t;
  for (const auto& token : tokenize(doc.text, rules)) t.add(token, 1.0);
  return t;
}

FrequencyTable count_frequencies(const Corpus& corpus, const TokenRules& rules) {
  const auto docs = corpus.documents();
  const auto n = static_cast<std::ptrdiff_t>(docs.size());
  std::unordered_map<std::string, double> merged;

  // Counts are integers held in doubles, so the reduction is exact and the
  // result does not depend on thread scheduling.
#pragma omp parallel
  {
    std::unordered_map<std::string, double> local;
#pragma omp for schedule(dynamic, 16) nowait
    for (std::ptrdiff_t d = 0; d < n; ++d) {
      for (auto& token : tokenize(docs[d].text, rules)) local[std::move(token)] += 1.0;
    }
#pragma omp critical(lexdrift_count_merge)
    for (auto& [word, c] : local) merged[word] += c;
  }

  FrequencyTable::Counts counts(merged.begin(), merged.end());
  return FrequencyTable::from_counts(std::move(counts));
}

FrequencyTable merge(std::span<const FrequencyTable> tables) {
  FrequencyTable out;
  double total = 0.0;
  for (const auto& t : tables) {
    for (const auto& [word, c] : t.counts()) out.add(word, c);
    total += t.total();
  }
  out.set_total(total);
  return out;
}

FrequencyTable scaled(const FrequencyTable& table, double factor) {
  if (!(factor > 0)) throw std::invalid_argument("scale factor must be positive");
  FrequencyTable::Counts counts;
  for (const auto& [word, c] : table.counts()) counts.emplace_hint(counts.end(), word, c * factor);
  auto out = FrequencyTable::from_counts(std::move(counts));
  out.set_total(table.total() * factor);
  return out;
}

FrequencyTable normalize_to_total(const FrequencyTable& table, double reference_total) {
  if (!(table.total() > 0)) throw DataError("cannot normalize empty table");
  if (!(reference_total > 0)) throw std::invalid_argument("reference total must be positive");
  auto out = scaled(table, reference_total / table.total());
  out.set_total(reference_total);
  return out;
}

Ranking::Ranking(std::string label, std::vector<RankedWord> entries)
    : label_(std::move(label)), entries_(std::move(entries)) {
  lookup_.reserve(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].rank != i + 1) {
      throw DataError("ranking: expected rank " + std::to_string(i + 1) + " for '" +
                      entries_[i].word + "', got " + std::to_string(entries_[i].rank));
    }
    if (!lookup_.emplace(entries_[i].word, entries_[i].rank).second) {
      throw DataError("ranking: duplicate word '" + entries_[i].word + "'");
    }
  }
}

std::optional<std::size_t> Ranking::rank_of(std::string_view word) const {
  auto it = lookup_.find(std::string(word));
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

const std::string& Ranking::word_at(std::size_t rank) const {
  if (rank < 1 || rank > entries_.size()) {
    throw std::out_of_range("rank " + std::to_string(rank) + " outside ranking");
  }
  return entries_[rank - 1].word;
}

Ranking rank_words(const FrequencyTable& table, std::string label) {
  std::vector<std::pair<std::string, double>> items(table.counts().begin(), table.counts().end());
  // Input is sorted by spelling already; stable sort keeps that as the tiebreak.
  std::stable_sort(items.begin(), items.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<RankedWord> entries;
  entries.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) entries.push_back({items[i].first, i + 1});
  return Ranking(std::move(label), std::move(entries));
}

void write_frequency_csv(const FrequencyTable& table, std::ostream& out) {
  csv::write_row(out, {"word", "count"});
  for (const auto& [word, c] : table.counts()) {
    csv::write_row(out, {word, csv::format_number(c)});
  }
  csv::write_row(out, {"#total", csv::format_number(table.total())});
}

FrequencyTable read_frequency_csv(std::istream& in) {
  auto rows = csv::read_with_header(in, {"word", "count"});
  if (rows.empty() || rows.back()[0] != "#total") {
    throw DataError("frequency csv: missing trailing #total row");
  }
  FrequencyTable::Counts counts;
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    if (!counts.emplace(rows[i][0], csv::parse_number(rows[i][1])).second) {
      throw DataError("frequency csv: duplicate word '" + rows[i][0] + "'");
    }
  }
  auto table = FrequencyTable::from_counts(std::move(counts));
  table.set_total(csv::parse_number(rows.back()[1]));
  return table;
}

void write_ranking_tsv(const Ranking& ranking, std::ostream& out) {
  for (const auto& e : ranking.entries()) out << e.word << '\t' << e.rank << '\n';
}

Ranking read_ranking_tsv(std::istream& in, std::string label) {
  std::vector<RankedWord> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw DataError("ranking tsv line " + std::to_string(line_no) + ": expected word<TAB>rank");
    }
    entries.push_back({line.substr(0, tab),
                       static_cast<std::size_t>(csv::parse_integer(line.substr(tab + 1)))});
  }
  std::sort(entries.begin(), entries.end(),
            [](const RankedWord& a, const RankedWord& b) { return a.rank < b.rank; });
  return Ranking(std::move(label), std::move(entries));
}

}  // namespace lexdrift
