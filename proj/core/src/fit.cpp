#include "ldlab/fit.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ldlab/error.hpp"

namespace ldlab {

FitResult fit_rate(const std::vector<std::pair<double, double>>& data) {
  FitResult out;
  std::vector<double> xs, ys;
  for (const auto& [x, y] : data) {
    if (!(x > 0.0)) throw ConfigError("rate fit needs positive abscissae");
    if (!(y > 0.0) || !std::isfinite(y)) {
      std::ostringstream os;
      os << "excluded non-positive value " << y << " at " << x;
      out.notices.push_back(os.str());
      continue;
    }
    xs.push_back(std::log(x));
    ys.push_back(std::log(y));
  }
  const auto n = xs.size();
  if (n < 3) throw ConfigError("rate fit needs at least 3 positive points, got " + std::to_string(n));
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx == 0.0) throw ConfigError("rate fit needs distinct abscissae");
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  for (std::size_t i = 0; i < n; ++i) {
    out.residual = std::max(out.residual, std::abs(ys[i] - (out.intercept + out.slope * xs[i])));
  }
  out.points = static_cast<int>(n);
  return out;
}

}  // namespace ldlab
