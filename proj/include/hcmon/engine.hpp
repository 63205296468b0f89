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

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hcmon/event.hpp"
#include "hcmon/metrics.hpp"
#include "hcmon/plan.hpp"

namespace hcmon::engine {

using Json = nlohmann::ordered_json;

class EngineError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EngineOptions {
  int hysteresis = 3;
  /// Upper bound on items held by a time-mode window, so memory stays bounded
  /// even when event timestamps are dense.
  std::size_t time_window_cap = 100'000;
  /// Predictions waiting for feedback, per accuracy evaluator.
  std::size_t pending_cap = 2'000;
};

/// Reference data extracted from a baseline event file for one evaluator.
struct BaselineSample {
  std::vector<double> numbers;
  std::vector<std::string> categories;

  std::size_t size() const { return numbers.size() + categories.size(); }
};

/// Pulls the values `evaluator` reads out of engine-format event lines
/// (events from its scope component only). Throws EngineError on a malformed
/// line.
BaselineSample extract_baseline(const plan::Evaluator& evaluator, std::string_view events);

struct MetricResult {
  std::int64_t ts = 0;
  std::uint64_t event = 0;
  std::string evaluator;
  double value = 0.0;
  std::size_t n = 0;
  std::map<std::string, metrics::GroupStat> group_stats;
};

Json to_json(const MetricResult& result);

struct Classification {
  bool fixable = false;
  std::string adaptation;  // adaptation rule id when fixable
  dsml::AdaptationAction action;
  std::string reason;  // when unfixable: "no rule", "cooldown", "component shutdown", ...
};

struct ActionOutcome {
  std::string adaptation;
  std::string action;  // rendered action, e.g. obfuscate(image_stored)
  bool applied = false;
  std::string reason;  // why it failed

  std::string status() const { return applied ? "applied" : "failed"; }
};

struct BaselineSummary {
  std::string context;
  std::string dataset;
  std::size_t n = 0;
};

struct Evidence {
  std::map<std::string, metrics::GroupStat> group_stats;
  std::optional<BaselineSummary> baseline;
  std::string sample_digest;  // FNV-1a over the window contents
  std::string error;          // evaluator error message
};

enum class RecordKind { kViolation, kEvaluatorError };

struct ViolationRecord {
  RecordKind kind = RecordKind::kViolation;
  std::int64_t ts = 0;
  std::uint64_t event = 0;  // 1-based ingest index
  std::string monitor_id;
  std::string rule;
  std::string techreq;
  std::vector<std::string> hcr_chain;
  dsml::Criticality severity = dsml::Criticality::kMedium;
  std::string metric;  // e.g. ks_drift(distance)
  metrics::MetricFamily family = metrics::MetricFamily::kFairness;
  std::optional<double> value;
  dsml::Threshold threshold;
  dsml::Window window;
  std::size_t n = 0;
  Evidence evidence;
  std::optional<Classification> classification;
  std::optional<ActionOutcome> outcome;
};

Json to_json(const ViolationRecord& record);

struct LogLine {
  Severity severity = Severity::kInfo;
  std::int64_t ts = 0;
  std::string text;
};

struct StepOutput {
  std::vector<MetricResult> results;
  std::vector<ViolationRecord> violations;
  std::vector<LogLine> log;
};

struct Counters {
  std::uint64_t ingested = 0;
  std::uint64_t routed = 0;
  std::uint64_t dropped = 0;
  std::uint64_t malformed = 0;

  bool operator==(const Counters&) const = default;
};

class EvaluatorState;

/// The runtime model: windows per evaluator, status per rule, counters.
/// One writer; ingest order defines every output.
class Engine {
 public:
  using FileReader = std::function<std::string(const std::string& path)>;

  /// Loads every baseline the plan references through `read`.
  Engine(plan::MonitorSpec spec, const FileReader& read, EngineOptions options = {});
  ~Engine();
  Engine(Engine&&) noexcept;
  Engine& operator=(Engine&&) noexcept;

  StepOutput ingest_line(std::string_view line);
  StepOutput ingest(const Event& event);

  /// Events from a shut-down component are dropped from then on.
  void mark_shutdown(const std::string& component);
  bool is_shutdown(const std::string& component) const { return shutdown_.count(component) > 0; }

  const Counters& counters() const { return counters_; }
  const plan::MonitorSpec& spec() const { return spec_; }
  const EngineOptions& options() const { return options_; }

  /// True while the rule is inside a violation episode.
  bool violated(std::string_view rule) const;

  /// Items held across all windows and pending-feedback buffers.
  std::size_t buffered_items() const;

  Json snapshot() const;
  /// Replaces the runtime state; throws EngineError if the document does not
  /// match this plan.
  void restore(const Json& document);

 private:
  struct RuleState {
    std::size_t rule = 0;  // index into spec_.rules
    bool violated = false;
    std::uint64_t since_event = 0;
    std::int64_t since_ts = 0;
    int streak = 0;
    bool error_episode = false;
  };

  void evaluate(std::size_t evaluator, const Event& event, StepOutput& out);
  ViolationRecord make_record(std::size_t evaluator, const RuleState& rule,
                              const Event& event) const;
  StepOutput drop(const Event& event, const std::string& why);

  plan::MonitorSpec spec_;
  EngineOptions options_;
  std::vector<std::unique_ptr<EvaluatorState>> evaluators_;
  std::vector<std::optional<BaselineSummary>> baselines_;
  std::vector<std::vector<std::size_t>> rules_by_evaluator_;
  std::vector<RuleState> rules_;
  std::map<std::string, std::vector<std::size_t>> evaluators_by_component_;
  std::map<std::string, std::vector<EventKind>> probe_kinds_;
  std::set<std::string> shutdown_;
  std::set<std::string> warned_;
  Counters counters_;
  std::int64_t last_ts_ = 0;
};

/// FNV-1a 64-bit.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace hcmon::engine
