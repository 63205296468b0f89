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
#include <deque>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hcmon/adapt.hpp"
#include "hcmon/diagnostic.hpp"
#include "hcmon/event.hpp"

/// Drone-delivery simulator with injectable mutations and detection scoring.
namespace hcmon::harness {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Role { kRouting, kRecognition, kFeedback, kNavigation };

std::string_view to_string(Role role);

/// Emits events for `component` on a fraction `rate` of simulation steps.
struct EmitterConfig {
  std::string id;
  std::string component;
  Role role = Role::kRouting;
  double rate = 0.0;
};

struct GroupConfig {
  std::string name;
  double proportion = 0.0;
  double positive_rate = 0.0;  // probability that a routing request is served
};

struct Population {
  std::string attribute = "group";
  std::vector<GroupConfig> groups;
};

/// Normally distributed feature (routing) or numeric signal (navigation).
struct Gaussian {
  std::string name;
  double mean = 0.0;
  double sd = 1.0;
};

/// Boolean signal on recognition events, e.g. `image_stored`.
struct FlagSignal {
  std::string name;
  double probability = 0.0;
};

struct ClassConfig {
  std::string name;
  double proportion = 0.0;
};

struct RecogniserConfig {
  double accuracy = 0.9;
  double confidence_mean = 0.8;
  double confidence_sd = 0.1;
};

struct ScenarioConfig {
  std::string name;
  std::uint64_t seed = 42;
  std::uint64_t n_events = 20'000;  // simulation steps; idle steps emit nothing
  std::int64_t start_ts = 1'767'225'600'000;
  std::int64_t interval_ms = 100;
  std::vector<EmitterConfig> emitters;
  Population population;
  std::vector<Gaussian> features;
  std::vector<Gaussian> signals;
  std::vector<FlagSignal> flags;
  std::vector<ClassConfig> classes;
  RecogniserConfig recogniser;
};

enum class MutationType { kBias, kLeak, kSpeed, kDrift, kPrediction };

/// bias(group, rate) | leak(rate) | speed(shift) | drift(field, shift) |
/// prediction(class, delta), active from step `onset` for `duration` steps
/// (to the end when absent).
struct Mutation {
  std::string id;
  MutationType type = MutationType::kBias;
  std::string target;  // group, field or class; empty for leak and speed
  double magnitude = 0.0;
  std::uint64_t onset = 0;
  std::optional<std::uint64_t> duration;

  /// Last affected step for a stream of `n_events` steps.
  std::uint64_t end(std::uint64_t n_events) const;
  bool active(std::uint64_t step) const;
};

/// `bias(B, 0.5)`
std::string injection_text(const Mutation& mutation);
/// Rule kind (metric family) a mutation is meant to trip.
std::string_view affected_kind(MutationType type);

struct ScenarioParse {
  std::optional<ScenarioConfig> config;
  std::vector<Mutation> mutations;
  std::vector<Diagnostic> diagnostics;
};

/// Reads a `model scenario` file. Mutation blocks are optional; a file with
/// only mutation blocks is accepted when `mutations_only` is set.
ScenarioParse parse_scenario(std::string_view text, bool mutations_only = false);

/// `bias(B, 0.5)@10000` or `drift(distance, 1.5)@8000+4000`.
std::optional<Mutation> parse_mutation_text(std::string_view text, std::string& error);

/// Proportions sum to 1, probabilities in [0, 1], emitter rates sum to at
/// most 1, mutations name known targets and start inside the stream.
std::vector<std::string> check_config(const ScenarioConfig& config,
                                      const std::vector<Mutation>& mutations);

struct TruthInterval {
  std::string mutation;
  std::string injection;
  std::string kind;
  std::uint64_t onset = 0;
  std::uint64_t end = 0;

  bool operator==(const TruthInterval&) const = default;
};

struct GroundTruth {
  std::int64_t start_ts = 0;
  std::int64_t interval_ms = 1;
  std::vector<TruthInterval> intervals;

  bool operator==(const GroundTruth&) const = default;
};

/// One JSON record per line; a header line carries the time base.
std::string format_truth(const GroundTruth& truth);
GroundTruth parse_truth(std::string_view text);

/// Step-at-a-time generator that doubles as the controllable system: actions
/// applied through the SystemHandle interface change later steps.
///
/// Every step consumes exactly one draw from the seeded master generator and
/// derives its own generator from it, so parameter changes never shift the
/// random sequence of later steps.
class Simulator final : public adapt::SystemHandle {
 public:
  /// Throws ConfigError when `check_config` reports problems.
  Simulator(ScenarioConfig config, std::vector<Mutation> mutations);

  bool done() const { return step_ >= config_.n_events; }
  /// Index of the next step.
  std::uint64_t step() const { return step_; }
  std::int64_t ts_of(std::uint64_t step) const;

  /// Advances one step; empty on idle steps.
  std::optional<engine::Event> next();

  adapt::HandleResult apply(const dsml::AdaptationAction& action,
                            const std::string& target) override;

  GroundTruth truth() const;
  const ScenarioConfig& config() const { return config_; }

 private:
  struct Effective;
  Effective effective(std::uint64_t step) const;

  ScenarioConfig config_;
  std::vector<Mutation> mutations_;
  std::mt19937_64 master_;
  std::uint64_t step_ = 0;
  std::vector<double> emitter_floor_;  // start of each emitter's slice of [0, 1)
  std::map<std::string, double> throttle_;
  std::set<std::string> shutdown_;
  std::set<std::pair<std::string, std::string>> obfuscated_;  // (component, signal)
  std::map<std::string, double> limits_;                      // signal -> cap
  std::deque<std::pair<std::string, std::string>> pending_;  // (ref_id, true class)
};

struct Generated {
  std::vector<std::string> lines;  // serialized events
  GroundTruth truth;
};

/// Open-loop generation: the whole stream with no actions applied.
Generated generate(const ScenarioConfig& config, const std::vector<Mutation>& mutations);

/// What scoring needs from a violation record.
struct ScoredViolation {
  std::int64_t ts = 0;
  std::string kind;  // metric family
  std::string rule;
};

/// Reads violation JSON lines, skipping evaluator-error records.
std::vector<ScoredViolation> parse_violations(std::string_view text);
std::vector<ScoredViolation> scored(const std::vector<engine::ViolationRecord>& records);

struct MutationScore {
  std::string mutation;
  std::string injection;
  std::string kind;
  std::uint64_t onset = 0;
  std::uint64_t end = 0;
  std::size_t violations = 0;  // violations of this kind
  std::size_t true_positives = 0;
  std::optional<double> precision;
  double recall = 0.0;
  std::optional<std::uint64_t> latency;  // steps from onset to first true positive
};

struct DetectionScore {
  std::size_t violations = 0;
  std::size_t true_positives = 0;
  std::optional<double> precision;  // empty without violations
  std::optional<double> recall;     // empty without mutations
  std::optional<std::uint64_t> latency;  // worst per-mutation latency
  std::vector<MutationScore> mutations;
};

/// A violation is a true positive when its kind matches an interval and its
/// step lies in [onset, end + grace].
DetectionScore score_detection(const std::vector<ScoredViolation>& violations,
                               const GroundTruth& truth, std::uint64_t grace);

engine::Json to_json(const DetectionScore& score);
/// Fixed-column text table, one row per mutation plus a total row.
std::string format_report(const DetectionScore& score);

}  // namespace hcmon::harness
