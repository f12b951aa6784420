#include "lexdrift/control_groups.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "lexdrift/csv.hpp"

namespace lexdrift {
namespace {

void check_group(const WordGroup& group, const Ranking& ranking) {
  if (group.words.size() != group.indices.size()) {
    throw DataError("word group has mismatched words and indices");
  }
  for (std::size_t k = 0; k < group.words.size(); ++k) {
    const auto idx = group.indices[k];
    if (idx < 1 || idx > ranking.size() || ranking.word_at(idx) != group.words[k]) {
      throw DataError("word group member '" + group.words[k] + "' does not match rank " +
                      std::to_string(idx) + " of ranking '" + ranking.label() + "'");
    }
  }
}

}  // namespace

ShiftOutOfRange::ShiftOutOfRange(long long index, std::size_t ranking_size)
    : DataError("shifted index " + std::to_string(index) + " outside [1, " +
                std::to_string(ranking_size) + "]"),
      index_(index) {}

const RatioPoint* RatioSweep::at(int shift) const {
  auto it = std::lower_bound(points.begin(), points.end(), shift,
                             [](const RatioPoint& p, int s) { return p.shift < s; });
  return (it != points.end() && it->shift == shift) ? &*it : nullptr;
}

WordGroup build_group(std::span<const std::string> words, const Ranking& ranking) {
  WordGroup group;
  group.ranking_label = ranking.label();
  for (const auto& w : words) {
    auto rank = ranking.rank_of(w);
    if (!rank) throw DataError("word '" + w + "' not in ranking");
    group.words.push_back(w);
    group.indices.push_back(*rank);
  }
  return group;
}

WordGroup example_group(const Ranking& ranking) {
  std::vector<std::string> words(kExampleWords.begin(), kExampleWords.end());
  return build_group(words, ranking);
}

WordGroup shifted_group(const WordGroup& group, int n, const Ranking& ranking) {
  WordGroup out;
  out.ranking_label = ranking.label();
  out.words.reserve(group.size());
  out.indices.reserve(group.size());
  for (const auto idx : group.indices) {
    const long long shifted = static_cast<long long>(idx) + n;
    if (shifted < 1 || shifted > static_cast<long long>(ranking.size())) {
      throw ShiftOutOfRange(shifted, ranking.size());
    }
    out.indices.push_back(static_cast<std::size_t>(shifted));
    out.words.push_back(ranking.word_at(static_cast<std::size_t>(shifted)));
  }
  return out;
}

double group_frequency(const WordGroup& group, const FrequencyTable& table) {
  double sum = 0.0;
  for (const auto& w : group.words) sum += table.count(w);
  return sum;
}

double frequency_ratio(const WordGroup& group, const FrequencyTable& table_s,
                       const FrequencyTable& table_sprime) {
  const double denom = group_frequency(group, table_sprime);
  if (!(denom > 0)) throw DataError("zero denominator for group");
  return group_frequency(group, table_s) / denom;
}

ShiftOutcome evaluate_shift(const WordGroup& target, int shift, const Ranking& ranking,
                            const FrequencyTable& table_s, const FrequencyTable& table_sprime) {
  ShiftOutcome outcome;
  WordGroup group;
  try {
    group = shifted_group(target, shift, ranking);
  } catch (const ShiftOutOfRange& e) {
    outcome.reason = e.what();
    return outcome;
  }
  const double fs = group_frequency(group, table_s);
  const double fsp = group_frequency(group, table_sprime);
  if (!(fsp > 0)) {
    outcome.reason = "zero denominator for group";
    return outcome;
  }
  outcome.ok = true;
  outcome.point = RatioPoint{shift, fs, fsp, fs / fsp};
  return outcome;
}

RatioSweep sweep_ratios(const WordGroup& target, int shift_lo, int shift_hi,
                        const Ranking& ranking, const FrequencyTable& table_s,
                        const FrequencyTable& table_sprime) {
  if (shift_lo > 0 || shift_hi < 0) {
    throw std::invalid_argument("shift range must contain 0");
  }
  check_group(target, ranking);
  const int span = shift_hi - shift_lo + 1;
  std::vector<ShiftOutcome> outcomes(static_cast<std::size_t>(span));

#pragma omp parallel for schedule(static)
  for (int k = 0; k < span; ++k) {
    outcomes[static_cast<std::size_t>(k)] =
        evaluate_shift(target, shift_lo + k, ranking, table_s, table_sprime);
  }

  RatioSweep sweep{shift_lo, shift_hi, {}, {}};
  for (int k = 0; k < span; ++k) {
    auto& o = outcomes[static_cast<std::size_t>(k)];
    if (o.ok) {
      sweep.points.push_back(o.point);
    } else {
      sweep.skipped.push_back({shift_lo + k, std::move(o.reason)});
    }
  }
  return sweep;
}

std::vector<BinStats> bin_stats(const RatioSweep& sweep, int bin_width) {
  if (bin_width < 1) throw std::invalid_argument("bin width must be positive");
  if (sweep.points.empty()) throw DataError("cannot bin an empty sweep");

  const long long lo = sweep.shift_lo;
  const long long hi = sweep.shift_hi;
  const long long span = hi - lo + 1;
  long long nbins = std::max<long long>(1, span / bin_width);

  std::vector<BinStats> bins;
  for (long long b = 0; b < nbins; ++b) {
    BinStats s;
    s.bin_lo = static_cast<int>(lo + b * bin_width);
    s.bin_hi = static_cast<int>(b + 1 == nbins ? hi : lo + (b + 1) * bin_width - 1);

    std::vector<double> values;
    for (const auto& p : sweep.points) {
      if (p.shift != 0 && p.shift >= s.bin_lo && p.shift <= s.bin_hi) values.push_back(p.ratio);
    }
    if (values.empty()) continue;
    s.n = values.size();
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(s.n);
    if (s.n == 1) {
      s.stddev = 0.0;
      s.degenerate = true;
    } else {
      double ss = 0.0;
      for (double v : values) ss += (v - s.mean) * (v - s.mean);
      s.stddev = std::sqrt(ss / static_cast<double>(s.n - 1));
    }
    bins.push_back(s);
  }
  return bins;
}

double target_zscore(const RatioSweep& sweep, std::span<const BinStats> bins) {
  const RatioPoint* target = sweep.at(0);
  if (!target) throw DataError("sweep has no point at shift 0");
  auto it = std::find_if(bins.begin(), bins.end(),
                         [](const BinStats& b) { return b.bin_lo <= 0 && 0 <= b.bin_hi; });
  if (it == bins.end()) throw DataError("no control bin contains shift 0");
  if (!(it->stddev > 0)) throw DataError("degenerate control bin");
  return (target->ratio - it->mean) / it->stddev;
}

void write_sweep_csv(const RatioSweep& sweep, std::ostream& out) {
  csv::write_row(out, {"shift", "freq_s", "freq_sprime", "ratio"});
  for (const auto& p : sweep.points) {
    csv::write_row(out, {std::to_string(p.shift), csv::format_number(p.freq_s),
                         csv::format_number(p.freq_sprime), csv::format_number(p.ratio)});
  }
}

void write_skipped_csv(const RatioSweep& sweep, std::ostream& out) {
  csv::write_row(out, {"shift", "reason"});
  for (const auto& s : sweep.skipped) csv::write_row(out, {std::to_string(s.shift), s.reason});
}

void write_bins_csv(std::span<const BinStats> bins, std::ostream& out) {
  csv::write_row(out, {"bin_lo", "bin_hi", "mean", "std", "n"});
  for (const auto& b : bins) {
    csv::write_row(out, {std::to_string(b.bin_lo), std::to_string(b.bin_hi),
                         csv::format_number(b.mean), csv::format_number(b.stddev),
                         std::to_string(b.n)});
  }
}

}  // namespace lexdrift
