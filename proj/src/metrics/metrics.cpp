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


#include "hcmon/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace hcmon::metrics {
namespace {

constexpr std::array<ArgType, 0> kNoArgs{};
constexpr std::array<ArgType, 1> kFieldArg{ArgType::kField};
constexpr std::array<ArgType, 2> kFieldBinsArgs{ArgType::kField, ArgType::kCount};
constexpr std::array<ArgType, 3> kFieldRangeArgs{ArgType::kField, ArgType::kNumber,
                                                 ArgType::kNumber};

const std::array<CatalogEntry, 9> kCatalog{{
    {MetricKind::kDemographicParity, "demographic_parity", kNoArgs, MetricFamily::kFairness},
    {MetricKind::kDisparateImpact, "disparate_impact", kNoArgs, MetricFamily::kFairness},
    {MetricKind::kKsDrift, "ks_drift", kFieldArg, MetricFamily::kInputDrift},
    {MetricKind::kPsiDrift, "psi_drift", kFieldBinsArgs, MetricFamily::kInputDrift},
    {MetricKind::kPredictionDrift, "prediction_drift", kNoArgs,
     MetricFamily::kPredictionDrift},
    {MetricKind::kAccuracy, "accuracy", kNoArgs, MetricFamily::kPerformance},
    {MetricKind::kMeanConfidence, "mean_confidence", kNoArgs, MetricFamily::kPerformance},
    {MetricKind::kRangeRate, "range_rate", kFieldRangeArgs, MetricFamily::kSafety},
    {MetricKind::kFlagRate, "flag_rate", kFieldArg, MetricFamily::kPrivacy},
}};

GroupCounts count_groups(std::span<const GroupedOutcome> window) {
  GroupCounts counts;
  for (const auto& o : window) {
    auto& c = counts[o.group];
    ++c.n;
    if (o.positive) ++c.positives;
  }
  return counts;
}

// Fills group_stats for every group and returns the rates of the eligible ones.
std::vector<double> eligible_rates(const GroupCounts& counts, std::size_t min_per_group,
                                   MetricValue& out) {
  std::vector<double> rates;
  for (const auto& [group, c] : counts) {
    const double rate = c.n == 0 ? 0.0 : static_cast<double>(c.positives) / c.n;
    out.group_stats[group] = GroupStat{c.n, rate};
    out.n += c.n;
    if (c.n >= min_per_group && c.n > 0) rates.push_back(rate);
  }
  if (rates.size() < 2) throw MetricError("insufficient groups");
  return rates;
}

double kl_to_mixture(const std::vector<double>& p, const std::vector<double>& m) {
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    kl += p[i] * std::log2(p[i] / std::max(m[i], kJsdSmoothing));
  }
  return kl;
}

}  // namespace

std::span<const CatalogEntry> catalog() { return kCatalog; }

const CatalogEntry* find_metric(std::string_view name) {
  for (const auto& e : kCatalog) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

const CatalogEntry& catalog_entry(MetricKind kind) {
  for (const auto& e : kCatalog) {
    if (e.kind == kind) return e;
  }
  throw std::logic_error("metric kind missing from catalog");
}

std::string_view to_string(MetricFamily family) {
  switch (family) {
    case MetricFamily::kFairness:
      return "fairness";
    case MetricFamily::kPrivacy:
      return "privacy";
    case MetricFamily::kSafety:
      return "safety";
    case MetricFamily::kInputDrift:
      return "input_drift";
    case MetricFamily::kPredictionDrift:
      return "prediction_drift";
    case MetricFamily::kPerformance:
      return "performance";
  }
  return "performance";
}

std::optional<MetricFamily> parse_family(std::string_view text) {
  for (auto f : {MetricFamily::kFairness, MetricFamily::kPrivacy, MetricFamily::kSafety,
                 MetricFamily::kInputDrift, MetricFamily::kPredictionDrift,
                 MetricFamily::kPerformance}) {
    if (to_string(f) == text) return f;
  }
  return std::nullopt;
}

bool is_fairness(MetricKind kind) {
  return kind == MetricKind::kDemographicParity || kind == MetricKind::kDisparateImpact;
}

bool requires_baseline(MetricKind kind) {
  return kind == MetricKind::kKsDrift || kind == MetricKind::kPsiDrift ||
         kind == MetricKind::kPredictionDrift;
}

// --- fairness --------------------------------------------------------------

std::size_t eligible_groups(const GroupCounts& counts, std::size_t min_per_group) {
  return static_cast<std::size_t>(std::count_if(counts.begin(), counts.end(), [&](const auto& kv) {
    return kv.second.n > 0 && kv.second.n >= min_per_group;
  }));
}

MetricValue demographic_parity_from_counts(const GroupCounts& counts,
                                           std::size_t min_per_group) {
  MetricValue out;
  const auto rates = eligible_rates(counts, min_per_group, out);
  const auto [lo, hi] = std::minmax_element(rates.begin(), rates.end());
  out.value = *hi - *lo;
  return out;
}

MetricValue demographic_parity_difference(std::span<const GroupedOutcome> window,
                                          std::size_t min_per_group) {
  return demographic_parity_from_counts(count_groups(window), min_per_group);
}

MetricValue disparate_impact_from_counts(const GroupCounts& counts, std::size_t min_per_group) {
  MetricValue out;
  const auto rates = eligible_rates(counts, min_per_group, out);
  const auto [lo, hi] = std::minmax_element(rates.begin(), rates.end());
  if (*hi <= 0.0) throw MetricError("undefined ratio");
  out.value = *lo / *hi;
  return out;
}

MetricValue disparate_impact_ratio(std::span<const GroupedOutcome> window,
                                   std::size_t min_per_group) {
  return disparate_impact_from_counts(count_groups(window), min_per_group);
}

// --- drift -----------------------------------------------------------------

double ks_statistic_sorted(std::span<const double> reference, std::span<const double> window) {
  if (reference.empty() || window.empty()) throw MetricError("empty sample");
  const double n = static_cast<double>(reference.size());
  const double m = static_cast<double>(window.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double sup = 0.0;
  while (i < reference.size() && j < window.size()) {
    const double x = std::min(reference[i], window[j]);
    while (i < reference.size() && reference[i] <= x) ++i;
    while (j < window.size() && window[j] <= x) ++j;
    sup = std::max(sup, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  return sup;
}

double ks_statistic(std::span<const double> reference, std::span<const double> window) {
  std::vector<double> a(reference.begin(), reference.end());
  std::vector<double> b(window.begin(), window.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return ks_statistic_sorted(a, b);
}

PsiBinning::PsiBinning(std::span<const double> reference, int bins) : bins_(bins) {
  if (bins < 2) throw MetricError("psi needs at least 2 bins");
  if (reference.empty()) throw MetricError("empty sample");
  const auto [lo, hi] = std::minmax_element(reference.begin(), reference.end());
  if (*lo == *hi) throw MetricError("degenerate baseline");
  low_ = *lo;
  width_ = (*hi - *lo) / bins;
}

int PsiBinning::bin_of(double x) const {
  const double pos = std::floor((x - low_) / width_);
  if (!(pos > 0.0)) return 0;  // also catches NaN
  if (pos >= bins_ - 1) return bins_ - 1;
  return static_cast<int>(pos);
}

std::vector<std::size_t> PsiBinning::histogram(std::span<const double> values) const {
  std::vector<std::size_t> counts(static_cast<std::size_t>(bins_), 0);
  for (double v : values) ++counts[static_cast<std::size_t>(bin_of(v))];
  return counts;
}

double psi_from_counts(std::span<const std::size_t> reference_counts, std::size_t reference_n,
                       std::span<const std::size_t> window_counts, std::size_t window_n) {
  if (reference_n == 0 || window_n == 0) throw MetricError("empty sample");
  double total = 0.0;
  for (std::size_t b = 0; b < reference_counts.size(); ++b) {
    const double r = static_cast<double>(reference_counts[b]) / reference_n + kPsiSmoothing;
    const double w = static_cast<double>(window_counts[b]) / window_n + kPsiSmoothing;
    total += (w - r) * std::log(w / r);
  }
  return std::max(total, 0.0);
}

double psi(std::span<const double> reference, std::span<const double> window, int bins) {
  if (window.empty()) throw MetricError("empty sample");
  const PsiBinning binning(reference, bins);
  const auto ref = binning.histogram(reference);
  const auto win = binning.histogram(window);
  return psi_from_counts(ref, reference.size(), win, window.size());
}

double jsd_from_counts(const CategoryCounts& reference, const CategoryCounts& window) {
  std::size_t rn = 0;
  std::size_t wn = 0;
  for (const auto& [k, c] : reference) rn += c;
  for (const auto& [k, c] : window) wn += c;
  if (rn == 0 || wn == 0) throw MetricError("empty sample");

  CategoryCounts keys = reference;
  for (const auto& [k, c] : window) keys.try_emplace(k, 0);
  std::vector<double> p;
  std::vector<double> q;
  std::vector<double> m;
  for (const auto& [k, unused] : keys) {
    const auto ri = reference.find(k);
    const auto wi = window.find(k);
    const double pk = ri == reference.end() ? 0.0 : static_cast<double>(ri->second) / rn;
    const double qk = wi == window.end() ? 0.0 : static_cast<double>(wi->second) / wn;
    p.push_back(pk);
    q.push_back(qk);
    m.push_back(0.5 * (pk + qk));
  }
  const double jsd = 0.5 * kl_to_mixture(p, m) + 0.5 * kl_to_mixture(q, m);
  return std::clamp(jsd, 0.0, 1.0);
}

double prediction_drift_jsd(std::span<const std::string> reference,
                            std::span<const std::string> window) {
  CategoryCounts r;
  CategoryCounts w;
  for (const auto& s : reference) ++r[s];
  for (const auto& s : window) ++w[s];
  return jsd_from_counts(r, w);
}

// --- performance / signals -------------------------------------------------

double accuracy_on_feedback(std::span<const PredictionLabel> pairs) {
  if (pairs.empty()) throw MetricError("no matched pairs");
  std::size_t correct = 0;
  for (const auto& p : pairs) {
    if (p.prediction == p.label) ++correct;
  }
  return static_cast<double>(correct) / pairs.size();
}

double mean_confidence(std::span<const double> confidences) {
  if (confidences.empty()) throw MetricError("empty sample");
  double sum = 0.0;
  for (double c : confidences) sum += c;
  return sum / confidences.size();
}

double range_violation_rate(std::span<const std::optional<double>> values, double low,
                            double high) {
  std::size_t present = 0;
  std::size_t outside = 0;
  for (const auto& v : values) {
    if (!v) continue;
    ++present;
    if (*v < low || *v > high) ++outside;
  }
  if (present == 0) throw MetricError("field absent");
  return static_cast<double>(outside) / present;
}

double flag_rate(std::span<const std::optional<bool>> flags) {
  std::size_t present = 0;
  std::size_t raised = 0;
  for (const auto& f : flags) {
    if (!f) continue;
    ++present;
    if (*f) ++raised;
  }
  if (present == 0) throw MetricError("field absent");
  return static_cast<double>(raised) / present;
}

}  // namespace hcmon::metrics
