#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "lexdrift/frequency.hpp"
#include "lexdrift/llm_sim.hpp"

namespace lexdrift {

/// Whether a frequency threshold admits words above (floor) or below
/// (ceiling) it.
enum class FrequencyBound { floor, ceiling };

struct WordSelection {
  std::set<std::string> allowlist;  // empty: no allowlist filter
  double min_baseline_freq = -std::numeric_limits<double>::infinity();
  double min_change_rate = -std::numeric_limits<double>::infinity();
  FrequencyBound bound = FrequencyBound::floor;
};

/// Observed frequencies f_d, counterfactual f* and change rates, all on one
/// normalization.
struct EstimationInputs {
  FrequencyTable f_d;
  FrequencyTable f_star;
  ChangeRates rates;
};

struct EtaEstimate {
  double eta = 0.0;
  std::map<std::string, double> residuals;  // (f_d - f*) - eta * f* * r
};

struct GridCell {
  double grid_f = 0.0;  // listed 1/f* value
  double min_f = 0.0;   // resolved threshold on f*
  double min_r = 0.0;
  std::optional<double> eta;  // unset when no word qualified
  std::size_t words_used = 0;
};

struct ImpactEstimate {
  std::vector<GridCell> cells;  // grid_f major, grid_r minor
  double mean_eta = 0.0;
  double std_eta = 0.0;  // sample std across evaluated cells
  std::optional<std::size_t> central_cell;
  std::map<std::string, double> residuals;  // of the central cell
};

/// Word-selection thresholds of the criteria grid.
inline const std::vector<double> kDefaultGridF{30, 40, 50, 60, 70, 80, 100, 150, 200, 500};
inline const std::vector<double> kDefaultGridR{0.4, 0.5, 0.6, 0.7};

struct GridOptions {
  std::vector<double> grid_f = kDefaultGridF;
  std::vector<double> grid_r = kDefaultGridR;
  std::set<std::string> allowlist;
  /// Tokens per unit of the 1/f* grid; 1 means per-token relative frequency.
  double f_unit = 1.0;
  FrequencyBound bound = FrequencyBound::floor;
};

/// Threshold on f* implied by a grid value X: total / (X * unit).
double resolve_frequency_threshold(double grid_value, double f_star_total, double f_unit);

/// Throws DataError("no words satisfy selection") on an empty result.
std::set<std::string> select_words(const FrequencyTable& f_star, const ChangeRates& rates,
                                   const WordSelection& selection);

/// Closed-form one-dimensional least squares through the origin.
/// Throws DataError("degenerate regressor") when every f* r is zero.
EtaEstimate estimate_eta(const EstimationInputs& inputs, const std::set<std::string>& words);

/// Evaluates one grid cell. Shared by the parallel and serial sweeps.
GridCell evaluate_cell(const EstimationInputs& inputs, const GridOptions& options,
                       double grid_f, double min_r);

/// Mean, spread and central residuals over already evaluated cells.
ImpactEstimate summarize_cells(const EstimationInputs& inputs, const GridOptions& options,
                               std::vector<GridCell> cells);

/// Parallel over grid cells. Throws DataError when every cell is empty.
ImpactEstimate sweep_estimates(const EstimationInputs& inputs, const GridOptions& options);

struct CalibratedSeries {
  std::map<int, double> raw;
  std::set<int> baseline_years;
  std::map<int, double> calibrated;
};

CalibratedSeries calibrate(const std::map<int, double>& series,
                           const std::set<int>& baseline_years);

/// `min_f,min_r,eta,words_used` per evaluated cell, then `mean,<m>,std,<s>`.
void write_estimate_csv(const ImpactEstimate& estimate, std::ostream& out);
/// `year,eta_raw,eta_calibrated`.
void write_series_csv(const CalibratedSeries& series, std::ostream& out);

}  // namespace lexdrift
