#include "gridtrack/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "gridtrack/error.hpp"

namespace gridtrack {

double pearson_r(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw StatisticsError("pearson_r: length mismatch");
  if (x.size() < 2) throw StatisticsError("pearson_r: need at least two pairs");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw StatisticsError("pearson_r: correlation undefined for constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

AndersonDarlingResult anderson_darling_normal(std::span<const double> x) {
  if (x.size() < 8) throw StatisticsError("anderson_darling_normal: need at least 8 values");
  std::vector<double> v(x.begin(), x.end());
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  const double nd = static_cast<double>(n);
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / nd;
  double ss = 0.0;
  for (double xi : v) ss += (xi - mean) * (xi - mean);
  const double sd = std::sqrt(ss / (nd - 1.0));
  if (sd == 0.0) throw StatisticsError("anderson_darling_normal: constant input");

  // log Phi(z) and log(1 - Phi(z)) through erfc to keep precision in the tails.
  const auto log_cdf = [](double z) { return std::log(0.5 * std::erfc(-z / std::numbers::sqrt2)); };
  const auto log_sf = [](double z) { return std::log(0.5 * std::erfc(z / std::numbers::sqrt2)); };

  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double zi = (v[i] - mean) / sd;
    const double zr = (v[n - 1 - i] - mean) / sd;
    s += (2.0 * static_cast<double>(i + 1) - 1.0) * (log_cdf(zi) + log_sf(zr));
  }
  const double a2 = -nd - s / nd;

  AndersonDarlingResult r;
  r.statistic = a2 * (1.0 + 0.75 / nd + 2.25 / (nd * nd));
  r.reject_at_5pct = r.statistic > r.critical_5pct;
  return r;
}

double median(std::span<const double> x) {
  if (x.empty()) throw StatisticsError("median of empty sequence");
  std::vector<double> v(x.begin(), x.end());
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace gridtrack
