#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace lexdrift {

struct LatexStripResult {
  std::string text;
  std::vector<std::string> warnings;
};

/// Unwraps \textit, \emph and \textbf to their argument and deletes \cite,
/// \citep and \citet entirely. Other commands pass through. Text with an
/// unterminated handled command is returned unchanged with a warning.
LatexStripResult strip_latex_artifacts(std::string_view text);

}  // namespace lexdrift
