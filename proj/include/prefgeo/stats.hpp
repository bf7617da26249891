#ifndef PREFGEO_STATS_HPP
#define PREFGEO_STATS_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include "prefgeo/common.hpp"

namespace prefgeo {

/// Linear-interpolation quantile (type 7) of an unsorted sample.
inline double quantile(std::vector<double> x, double p) {
  require(!x.empty(), "quantile: empty sample");
  require(p >= 0.0 && p <= 1.0, "quantile: p must be in [0,1]");
  std::sort(x.begin(), x.end());
  const double h = p * (static_cast<double>(x.size()) - 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= x.size()) return x.back();
  const double frac = h - static_cast<double>(lo);
  return x[lo] + frac * (x[lo + 1] - x[lo]);
}

inline double mean(const std::vector<double>& x) {
  require(!x.empty(), "mean: empty sample");
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

inline double variance(const std::vector<double>& x) {
  require(x.size() >= 2, "variance: need at least two values");
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / (static_cast<double>(x.size()) - 1.0);
}

/// Split-chain potential scale reduction factor (two halves of one chain).
/// Values near 1 indicate the halves agree; a convergence diagnostic, not
/// a gate.
inline double split_rhat(const std::vector<double>& draws) {
  const std::size_t l = draws.size() / 2;
  if (l < 2) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> a(draws.begin(), draws.begin() + l);
  std::vector<double> b(draws.end() - l, draws.end());
  const double ma = mean(a), mb = mean(b);
  const double w = 0.5 * (variance(a) + variance(b));
  const double grand = 0.5 * (ma + mb);
  const double bvar =
      static_cast<double>(l) * ((ma - grand) * (ma - grand) + (mb - grand) * (mb - grand));
  if (w <= 0.0) return 1.0;
  const double var_plus = (static_cast<double>(l) - 1.0) / static_cast<double>(l) * w +
                          bvar / static_cast<double>(l);
  return std::sqrt(var_plus / w);
}

}  // namespace prefgeo

#endif
