#pragma once

#include <array>
#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lexdrift/error.hpp"
#include "lexdrift/frequency.hpp"

namespace lexdrift {

/// The eight LLM-favoured example words used as the default target group.
inline constexpr std::array<std::string_view, 8> kExampleWords{
    "significant", "crucial",  "effectively",  "additionally",
    "comprehensive", "enhance", "capabilities", "valuable"};

inline constexpr int kDefaultShiftLo = -250;
inline constexpr int kDefaultShiftHi = 250;
inline constexpr int kDefaultBinWidth = 50;

/// Words identified by their 1-based ranks in a reference ranking.
struct WordGroup {
  std::vector<std::string> words;
  std::vector<std::size_t> indices;
  std::string ranking_label;

  std::size_t size() const { return words.size(); }
  bool operator==(const WordGroup&) const = default;
};

/// A shifted index fell outside [1, ranking size].
class ShiftOutOfRange : public DataError {
 public:
  ShiftOutOfRange(long long index, std::size_t ranking_size);
  long long index() const { return index_; }

 private:
  long long index_;
};

struct RatioPoint {
  int shift = 0;
  double freq_s = 0.0;
  double freq_sprime = 0.0;
  double ratio = 0.0;
};

struct SkippedShift {
  int shift = 0;
  std::string reason;
};

struct RatioSweep {
  int shift_lo = 0;
  int shift_hi = 0;
  std::vector<RatioPoint> points;  // ascending shift
  std::vector<SkippedShift> skipped;  // ascending shift

  const RatioPoint* at(int shift) const;
};

struct BinStats {
  int bin_lo = 0;
  int bin_hi = 0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation
  std::size_t n = 0;
  bool degenerate = false;  // n == 1, stddev forced to 0
};

WordGroup build_group(std::span<const std::string> words, const Ranking& ranking);
WordGroup example_group(const Ranking& ranking);

/// Throws ShiftOutOfRange when some index + n leaves the ranking.
WordGroup shifted_group(const WordGroup& group, int n, const Ranking& ranking);

/// Sum of the table's counts over the group; absent words contribute 0.
double group_frequency(const WordGroup& group, const FrequencyTable& table);

/// Throws DataError("zero denominator for group") when F(S') is 0.
double frequency_ratio(const WordGroup& group, const FrequencyTable& table_s,
                       const FrequencyTable& table_sprime);

/// One point per valid shift in [shift_lo, shift_hi]; invalid shifts are
/// recorded in `skipped`. Parallel over shifts.
RatioSweep sweep_ratios(const WordGroup& target, int shift_lo, int shift_hi,
                        const Ranking& ranking, const FrequencyTable& table_s,
                        const FrequencyTable& table_sprime);

/// Ratio of a single shift, or the reason it is skipped. Shared by the
/// parallel and serial sweeps.
struct ShiftOutcome {
  bool ok = false;
  RatioPoint point;
  std::string reason;
};
ShiftOutcome evaluate_shift(const WordGroup& target, int shift, const Ranking& ranking,
                            const FrequencyTable& table_s,
                            const FrequencyTable& table_sprime);

/// Bins partition [shift_lo, shift_hi] in steps of bin_width starting at
/// shift_lo; a trailing remainder narrower than bin_width is folded into the
/// preceding bin. Only control points (shift != 0) feed the statistics and
/// bins without any control point are omitted.
std::vector<BinStats> bin_stats(const RatioSweep& sweep, int bin_width);

/// (R_0 - mean) / std of the bin whose range contains shift 0.
double target_zscore(const RatioSweep& sweep, std::span<const BinStats> bins);

void write_sweep_csv(const RatioSweep& sweep, std::ostream& out);
void write_skipped_csv(const RatioSweep& sweep, std::ostream& out);
void write_bins_csv(std::span<const BinStats> bins, std::ostream& out);

}  // namespace lexdrift
