#pragma once

#include <span>

namespace gridtrack {

/// Product-moment correlation. Throws StatisticsError for constant input.
[[nodiscard]] double pearson_r(std::span<const double> x, std::span<const double> y);

struct AndersonDarlingResult {
  double statistic = 0.0;  // A*^2 = A^2 (1 + 0.75/n + 2.25/n^2)
  double critical_5pct = 0.752;
  bool reject_at_5pct = false;
};

/// Composite normality test (mean and variance estimated from the sample).
[[nodiscard]] AndersonDarlingResult anderson_darling_normal(std::span<const double> x);

[[nodiscard]] double median(std::span<const double> x);

}  // namespace gridtrack
