#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace lapconv {

double median(std::vector<double> values);

/// Linear-interpolation quantile (the "type 7" rule) for q in [0, 1].
double quantile(std::vector<double> values, double q);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  std::size_t points = 0;
};

/// Ordinary least squares y = intercept + slope x. Needs two distinct x.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

/// Slope of log(err) against log(n); empty unless at least `min_distinct`
/// distinct n are present and every err is positive.
std::optional<LinearFit> fit_loglog(std::span<const double> n, std::span<const double> err,
                                    std::size_t min_distinct = 4);

/// Spearman rank correlation with average ranks for ties. NaN when either
/// input is constant.
double spearman(std::span<const double> x, std::span<const double> y);

} // namespace lapconv
