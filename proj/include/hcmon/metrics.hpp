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

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hcmon::metrics {

// ---------------------------------------------------------------------------
// Catalog
// ---------------------------------------------------------------------------

enum class MetricKind {
  kDemographicParity,
  kDisparateImpact,
  kKsDrift,
  kPsiDrift,
  kPredictionDrift,
  kAccuracy,
  kMeanConfidence,
  kRangeRate,
  kFlagRate,
};

/// Coarse grouping used for scoring detections against injected mutations.
enum class MetricFamily {
  kFairness,
  kPrivacy,
  kSafety,
  kInputDrift,
  kPredictionDrift,
  kPerformance,
};

enum class ArgType {
  kField,   // identifier naming a feature or signal
  kNumber,  // any real
  kCount,   // integer >= 2
};

struct CatalogEntry {
  MetricKind kind;
  std::string_view name;
  std::span<const ArgType> args;
  MetricFamily family;
};

std::span<const CatalogEntry> catalog();
const CatalogEntry* find_metric(std::string_view name);
const CatalogEntry& catalog_entry(MetricKind kind);

std::string_view to_string(MetricFamily family);
std::optional<MetricFamily> parse_family(std::string_view text);

bool is_fairness(MetricKind kind);
bool requires_baseline(MetricKind kind);

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

class MetricError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GroupStat {
  std::size_t n = 0;
  double rate = 0.0;  // positive rate

  bool operator==(const GroupStat&) const = default;
};

struct MetricValue {
  double value = 0.0;
  std::size_t n = 0;
  std::map<std::string, GroupStat> group_stats;
};

// ---------------------------------------------------------------------------
// Fairness
// ---------------------------------------------------------------------------

struct GroupedOutcome {
  std::string group;
  bool positive = false;
};

struct GroupCount {
  std::size_t n = 0;
  std::size_t positives = 0;
};
using GroupCounts = std::map<std::string, GroupCount>;

/// Max pairwise gap in positive rate among groups holding at least
/// `min_per_group` outcomes. Throws MetricError("insufficient groups") when
/// fewer than two groups qualify.
MetricValue demographic_parity_difference(std::span<const GroupedOutcome> window,
                                          std::size_t min_per_group);
MetricValue demographic_parity_from_counts(const GroupCounts& counts,
                                           std::size_t min_per_group);

/// Min pairwise ratio of positive rates, i.e. min rate / max rate over the
/// eligible groups. Throws MetricError("undefined ratio") when every eligible
/// rate is zero.
MetricValue disparate_impact_ratio(std::span<const GroupedOutcome> window,
                                   std::size_t min_per_group);
MetricValue disparate_impact_from_counts(const GroupCounts& counts, std::size_t min_per_group);

/// Number of groups with at least `min_per_group` outcomes.
std::size_t eligible_groups(const GroupCounts& counts, std::size_t min_per_group);

// ---------------------------------------------------------------------------
// Drift
// ---------------------------------------------------------------------------

double ks_statistic(std::span<const double> reference, std::span<const double> window);
/// Both inputs must already be sorted ascending.
double ks_statistic_sorted(std::span<const double> reference, std::span<const double> window);

inline constexpr double kPsiSmoothing = 1e-4;

/// Equal-width bins spanning the reference min..max. Out-of-range values are
/// clipped into the edge bins.
class PsiBinning {
 public:
  PsiBinning(std::span<const double> reference, int bins);

  int bins() const { return bins_; }
  int bin_of(double x) const;
  std::vector<std::size_t> histogram(std::span<const double> values) const;

 private:
  int bins_;
  double low_;
  double width_;
};

double psi(std::span<const double> reference, std::span<const double> window, int bins);
double psi_from_counts(std::span<const std::size_t> reference_counts, std::size_t reference_n,
                       std::span<const std::size_t> window_counts, std::size_t window_n);

inline constexpr double kJsdSmoothing = 1e-9;
using CategoryCounts = std::map<std::string, std::size_t>;

double prediction_drift_jsd(std::span<const std::string> reference,
                            std::span<const std::string> window);
double jsd_from_counts(const CategoryCounts& reference, const CategoryCounts& window);

// ---------------------------------------------------------------------------
// Performance, safety and privacy signals
// ---------------------------------------------------------------------------

struct PredictionLabel {
  std::string prediction;
  std::string label;
};

double accuracy_on_feedback(std::span<const PredictionLabel> pairs);
double mean_confidence(std::span<const double> confidences);
/// Fraction of present values outside [low, high]. Absent entries are skipped.
double range_violation_rate(std::span<const std::optional<double>> values, double low,
                            double high);
double flag_rate(std::span<const std::optional<bool>> flags);

}  // namespace hcmon::metrics
