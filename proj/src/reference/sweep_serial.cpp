#include "lexdrift/reference.hpp"

#include <stdexcept>

namespace lexdrift::reference {

RatioSweep sweep_ratios_serial(const WordGroup& target, int shift_lo, int shift_hi,
                               const Ranking& ranking, const FrequencyTable& table_s,
                               const FrequencyTable& table_sprime) {
  if (shift_lo > 0 || shift_hi < 0) throw std::invalid_argument("shift range must contain 0");
  RatioSweep sweep{shift_lo, shift_hi, {}, {}};
  for (int shift = shift_lo; shift <= shift_hi; ++shift) {
    auto o = evaluate_shift(target, shift, ranking, table_s, table_sprime);
    if (o.ok) {
      sweep.points.push_back(o.point);
    } else {
      sweep.skipped.push_back({shift, std::move(o.reason)});
    }
  }
  return sweep;
}

}  // namespace lexdrift::reference
