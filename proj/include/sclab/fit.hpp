#pragma once

#include <span>

namespace sclab {

struct PowerLawFit {
  double slope = 0.0;
  double stderr_slope = 0.0;
  double intercept = 0.0;
  int points = 0;
};

// ordinary least squares of log(value) against log<t>; values must be positive
PowerLawFit fit_power_law(std::span<const double> t, std::span<const double> value);

} // namespace sclab
