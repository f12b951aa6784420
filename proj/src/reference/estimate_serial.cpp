#include "lexdrift/reference.hpp"

#include <stdexcept>

namespace lexdrift::reference {

ImpactEstimate sweep_estimates_serial(const EstimationInputs& inputs, const GridOptions& options) {
  if (options.grid_f.empty() || options.grid_r.empty()) {
    throw std::invalid_argument("criteria grids must be nonempty");
  }
  std::vector<GridCell> cells;
  for (double f : options.grid_f) {
    for (double r : options.grid_r) cells.push_back(evaluate_cell(inputs, options, f, r));
  }
  return summarize_cells(inputs, options, std::move(cells));
}

}  // namespace lexdrift::reference
