#pragma once

#include <string>
#include <utility>
#include <vector>

namespace ldlab {

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  ///< max |log deviation| from the fitted line
  int points = 0;
  std::vector<std::string> notices;
};

/// Least squares on (log x, log y). Non-positive y are dropped with a notice;
/// fewer than three remaining points is an error.
FitResult fit_rate(const std::vector<std::pair<double, double>>& data);

}  // namespace ldlab
