#pragma once

// Single-threaded counterparts of the OpenMP kernels. They share the
// per-item logic with the parallel versions and differ only in scheduling
// and reduction, so tests can pin the parallel output to them.

#include "lexdrift/control_groups.hpp"
#include "lexdrift/corpus.hpp"
#include "lexdrift/frequency.hpp"
#include "lexdrift/impact.hpp"

namespace lexdrift::reference {

FrequencyTable count_frequencies_serial(const Corpus& corpus, const TokenRules& rules);

RatioSweep sweep_ratios_serial(const WordGroup& target, int shift_lo, int shift_hi,
                               const Ranking& ranking, const FrequencyTable& table_s,
                               const FrequencyTable& table_sprime);

ImpactEstimate sweep_estimates_serial(const EstimationInputs& inputs,
                                      const GridOptions& options);

}  // namespace lexdrift::reference
