// Copyright 2026 The hcmon Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#pragma once

// Brute-force reference implementations, written from the metric
// definitions without sharing code or shortcuts with the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

struct Outcome {
  std::string group;
  bool positive;
};

inline std::map<std::string, double> group_rates(const std::vector<Outcome>& window,
                                                 std::size_t min_per_group) {
  std::set<std::string> groups;
  for (const auto& o : window) groups.insert(o.group);
  std::map<std::string, double> rates;
  for (const auto& g : groups) {
    std::size_t n = 0;
    std::size_t pos = 0;
    for (const auto& o : window) {
      if (o.group != g) continue;
      ++n;
      if (o.positive) ++pos;
    }
    if (n >= min_per_group && n > 0) rates[g] = static_cast<double>(pos) / static_cast<double>(n);
  }
  return rates;
}

/// Largest gap over every ordered pair of eligible groups.
inline std::optional<double> dpd(const std::vector<Outcome>& window, std::size_t min_per_group) {
  const auto rates = group_rates(window, min_per_group);
  if (rates.size() < 2) return std::nullopt;
  double best = 0.0;
  for (const auto& [a, ra] : rates) {
    for (const auto& [b, rb] : rates) best = std::max(best, std::abs(ra - rb));
  }
  return best;
}

/// Smallest ratio over every pair with a non-zero larger rate.
inline std::optional<double> dir(const std::vector<Outcome>& window, std::size_t min_per_group) {
  const auto rates = group_rates(window, min_per_group);
  if (rates.size() < 2) return std::nullopt;
  std::optional<double> best;
  for (const auto& [a, ra] : rates) {
    for (const auto& [b, rb] : rates) {
      if (a == b || rb == 0.0 || ra > rb) continue;
      const double r = ra / rb;
      best = best ? std::min(*best, r) : r;
    }
  }
  return best;
}

inline double ecdf(const std::vector<double>& sample, double t) {
  std::size_t below = 0;
  for (double x : sample) {
    if (x <= t) ++below;
  }
  return static_cast<double>(below) / static_cast<double>(sample.size());
}

/// Supremum of |F_ref - F_win| checked at every observed point: O(n^2).
inline double ks(const std::vector<double>& ref, const std::vector<double>& win) {
  double best = 0.0;
  for (const auto* side : {&ref, &win}) {
    for (double t : *side) best = std::max(best, std::abs(ecdf(ref, t) - ecdf(win, t)));
  }
  return best;
}

/// Bin by explicit edges low + k * width, clipping into the edge bins.
inline std::vector<double> psi_proportions(const std::vector<double>& values, double low,
                                           double width, int bins) {
  std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
  for (double x : values) {
    int b = 0;
    for (int k = 1; k < bins; ++k) {
      if (x >= low + width * k) b = k;
    }
    counts[static_cast<std::size_t>(b)] += 1.0;
  }
  for (auto& c : counts) c /= static_cast<double>(values.size());
  return counts;
}

inline double psi(const std::vector<double>& ref, const std::vector<double>& win, int bins,
                  double eps = 1e-4) {
  const double low = *std::min_element(ref.begin(), ref.end());
  const double high = *std::max_element(ref.begin(), ref.end());
  const double width = (high - low) / bins;
  const auto p = psi_proportions(ref, low, width, bins);
  const auto q = psi_proportions(win, low, width, bins);
  double total = 0.0;
  for (int i = 0; i < bins; ++i) {
    const double a = p[static_cast<std::size_t>(i)] + eps;
    const double b = q[static_cast<std::size_t>(i)] + eps;
    total += (b - a) * (std::log(b) - std::log(a));
  }
  return total;
}

/// Jensen-Shannon divergence in bits over the union of categories.
inline double jsd(const std::vector<std::string>& ref, const std::vector<std::string>& win) {
  std::set<std::string> keys(ref.begin(), ref.end());
  keys.insert(win.begin(), win.end());
  double total = 0.0;
  for (const auto& k : keys) {
    const double p = static_cast<double>(std::count(ref.begin(), ref.end(), k)) /
                     static_cast<double>(ref.size());
    const double q = static_cast<double>(std::count(win.begin(), win.end(), k)) /
                     static_cast<double>(win.size());
    const double m = (p + q) / 2.0;
    if (p > 0) total += 0.5 * p * std::log(p / m) / std::log(2.0);
    if (q > 0) total += 0.5 * q * std::log(q / m) / std::log(2.0);
  }
  return total;
}

inline double fraction(std::size_t hits, std::size_t n) {
  return static_cast<double>(hits) / static_cast<double>(n);
}

inline double accuracy(const std::vector<std::pair<std::string, std::string>>& pairs) {
  std::size_t hits = 0;
  for (const auto& [p, l] : pairs) hits += p == l ? 1 : 0;
  return fraction(hits, pairs.size());
}

/// Fraction of present values outside [low, high].
inline std::optional<double> range_rate(const std::vector<std::optional<double>>& values,
                                        double low, double high) {
  std::size_t present = 0;
  std::size_t outside = 0;
  for (const auto& v : values) {
    if (!v) continue;
    ++present;
    if (*v < low || *v > high) ++outside;
  }
  if (present == 0) return std::nullopt;
  return fraction(outside, present);
}

inline std::optional<double> flag_rate(const std::vector<std::optional<bool>>& flags) {
  std::size_t present = 0;
  std::size_t raised = 0;
  for (const auto& f : flags) {
    if (!f) continue;
    ++present;
    if (*f) ++raised;
  }
  if (present == 0) return std::nullopt;
  return fraction(raised, present);
}

/// Kahan-compensated mean, a different summation from the library's.
inline double mean(const std::vector<double>& xs) {
  double sum = 0.0;
  double carry = 0.0;
  for (double x : xs) {
    const double y = x - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  return sum / static_cast<double>(xs.size());
}

}  // namespace oracle
