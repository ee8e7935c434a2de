#pragma once

// Brute-force quartiles: selection-sort a copy, then interpolate between the
// order statistics at rank (n - 1) p.

#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

inline std::vector<double> selection_sorted(std::vector<double> v) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::size_t best = i;
    for (std::size_t j = i + 1; j < v.size(); ++j) {
      if (v[j] < v[best]) best = j;
    }
    std::swap(v[i], v[best]);
  }
  return v;
}

inline double quantile(const std::vector<double>& sample, double p) {
  const auto s = selection_sorted(sample);
  const double rank = (static_cast<double>(s.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = lo + 1 < s.size() ? lo + 1 : lo;
  return s[lo] + (rank - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

inline std::vector<bool> tukey_flags(const std::vector<double>& sample, double k = 1.5) {
  const double q1 = quantile(sample, 0.25);
  const double q3 = quantile(sample, 0.75);
  const double iqr = q3 - q1;
  std::vector<bool> flags;
  for (double v : sample) flags.push_back(v < q1 - k * iqr || v > q3 + k * iqr);
  return flags;
}

}  // namespace oracle
