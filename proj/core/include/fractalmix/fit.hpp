#pragma once

#include <span>

namespace fractalmix {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t points = 0;
};

// Ordinary least squares y ~ intercept + slope * x. Requires >= 2 points with
// distinct x; throws ValidationError otherwise.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace fractalmix
