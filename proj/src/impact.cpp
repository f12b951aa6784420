#include "lexdrift/impact.hpp"

#include <omp.h>

#include <cmath>
#include <stdexcept>

#include "lexdrift/csv.hpp"
#include "lexdrift/error.hpp"

namespace lexdrift {

double resolve_frequency_threshold(double grid_value, double f_star_total, double f_unit) {
  if (!(grid_value > 0) || !(f_unit > 0)) {
    throw std::invalid_argument("grid values and frequency unit must be positive");
  }
  return f_star_total / (grid_value * f_unit);
}

std::set<std::string> select_words(const FrequencyTable& f_star, const ChangeRates& rates,
                                   const WordSelection& selection) {
  std::set<std::string> words;
  for (const auto& [word, fs] : f_star.counts()) {
    if (!(fs > 0)) continue;
    const auto r = rates.rate(word);
    if (!r) continue;
    if (!selection.allowlist.empty() && !selection.allowlist.contains(word)) continue;
    const bool freq_ok = selection.bound == FrequencyBound::floor
                             ? fs >= selection.min_baseline_freq
                             : fs <= selection.min_baseline_freq;
    if (!freq_ok || !(*r >= selection.min_change_rate)) continue;
    words.insert(word);
  }
  if (words.empty()) throw DataError("no words satisfy selection");
  return words;
}

EtaEstimate estimate_eta(const EstimationInputs& inputs, const std::set<std::string>& words) {
  if (words.empty()) throw DataError("no words satisfy selection");
  double numerator = 0.0;
  double denominator = 0.0;
  for (const auto& w : words) {
    const double fs = inputs.f_star.count(w);
    const auto r = inputs.rates.rate(w);
    if (!(fs > 0)) throw DataError("word '" + w + "' has no baseline frequency");
    if (!r) throw DataError("word '" + w + "' has no change rate");
    const double x = fs * *r;
    numerator += (inputs.f_d.count(w) - fs) * x;
    denominator += x * x;
  }
  if (!(denominator > 0)) throw DataError("degenerate regressor");

  EtaEstimate est;
  est.eta = numerator / denominator;
  for (const auto& w : words) {
    const double fs = inputs.f_star.count(w);
    est.residuals.emplace(w, (inputs.f_d.count(w) - fs) - est.eta * fs * *inputs.rates.rate(w));
  }
  return est;
}

GridCell evaluate_cell(const EstimationInputs& inputs, const GridOptions& options,
                       double grid_f, double min_r) {
  GridCell cell;
  cell.grid_f = grid_f;
  cell.min_f = resolve_frequency_threshold(grid_f, inputs.f_star.total(), options.f_unit);
  cell.min_r = min_r;
  WordSelection sel{options.allowlist, cell.min_f, min_r, options.bound};
  try {
    const auto words = select_words(inputs.f_star, inputs.rates, sel);
    cell.eta = estimate_eta(inputs, words).eta;
    cell.words_used = words.size();
  } catch (const DataError&) {
    cell.eta.reset();
    cell.words_used = 0;
  }
  return cell;
}

ImpactEstimate summarize_cells(const EstimationInputs& inputs, const GridOptions& options,
                               std::vector<GridCell> cells) {
  ImpactEstimate est;
  est.cells = std::move(cells);
  std::vector<double> etas;
  for (const auto& c : est.cells) {
    if (c.eta) etas.push_back(*c.eta);
  }
  if (etas.empty()) throw DataError("no grid cell selected any word");

  double sum = 0.0;
  for (double e : etas) sum += e;
  est.mean_eta = sum / static_cast<double>(etas.size());
  if (etas.size() > 1) {
    double ss = 0.0;
    for (double e : etas) ss += (e - est.mean_eta) * (e - est.mean_eta);
    est.std_eta = std::sqrt(ss / static_cast<double>(etas.size() - 1));
  }

  // Central cell: the middle of the grid, or the evaluated cell nearest to it.
  const auto nf = static_cast<long>(options.grid_f.size());
  const auto nr = static_cast<long>(options.grid_r.size());
  const long cf = (nf - 1) / 2;
  const long cr = (nr - 1) / 2;
  long best = -1;
  long best_dist = 0;
  for (long k = 0; k < static_cast<long>(est.cells.size()); ++k) {
    if (!est.cells[static_cast<std::size_t>(k)].eta) continue;
    const long dist = std::labs(k / nr - cf) + std::labs(k % nr - cr);
    if (best < 0 || dist < best_dist) {
      best = k;
      best_dist = dist;
    }
  }
  est.central_cell = static_cast<std::size_t>(best);
  const auto& central = est.cells[static_cast<std::size_t>(best)];
  WordSelection sel{options.allowlist, central.min_f, central.min_r, options.bound};
  est.residuals = estimate_eta(inputs, select_words(inputs.f_star, inputs.rates, sel)).residuals;
  return est;
}

ImpactEstimate sweep_estimates(const EstimationInputs& inputs, const GridOptions& options) {
  if (options.grid_f.empty() || options.grid_r.empty()) {
    throw std::invalid_argument("criteria grids must be nonempty");
  }
  const auto nr = static_cast<std::ptrdiff_t>(options.grid_r.size());
  const auto ncells = static_cast<std::ptrdiff_t>(options.grid_f.size()) * nr;
  std::vector<GridCell> cells(static_cast<std::size_t>(ncells));

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t k = 0; k < ncells; ++k) {
    cells[static_cast<std::size_t>(k)] = evaluate_cell(
        inputs, options, options.grid_f[static_cast<std::size_t>(k / nr)],
        options.grid_r[static_cast<std::size_t>(k % nr)]);
  }
  return summarize_cells(inputs, options, std::move(cells));
}

CalibratedSeries calibrate(const std::map<int, double>& series, const std::set<int>& baseline_years) {
  if (baseline_years.empty()) throw std::invalid_argument("baseline years must be nonempty");
  double sum = 0.0;
  for (int y : baseline_years) {
    auto it = series.find(y);
    if (it == series.end()) throw DataError("baseline year " + std::to_string(y) + " missing from series");
    sum += it->second;
  }
  const double offset = sum / static_cast<double>(baseline_years.size());
  CalibratedSeries out{series, baseline_years, {}};
  for (const auto& [year, value] : series) out.calibrated.emplace(year, value - offset);
  return out;
}

void write_estimate_csv(const ImpactEstimate& estimate, std::ostream& out) {
  csv::write_row(out, {"min_f", "min_r", "eta", "words_used"});
  for (const auto& c : estimate.cells) {
    if (!c.eta) continue;
    csv::write_row(out, {csv::format_number(c.min_f), csv::format_number(c.min_r),
                         csv::format_number(*c.eta), std::to_string(c.words_used)});
  }
  csv::write_row(out, {"mean", csv::format_number(estimate.mean_eta), "std",
                       csv::format_number(estimate.std_eta)});
}

void write_series_csv(const CalibratedSeries& series, std::ostream& out) {
  csv::write_row(out, {"year", "eta_raw", "eta_calibrated"});
  for (const auto& [year, raw] : series.raw) {
    csv::write_row(out, {std::to_string(year), csv::format_number(raw),
                         csv::format_number(series.calibrated.at(year))});
  }
}

}  // namespace lexdrift
