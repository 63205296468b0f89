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
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hcmon/diagnostic.hpp"
#include "hcmon/dsml/model.hpp"
#include "hcmon/metrics.hpp"
#include "hcmon/weaver.hpp"

/// The compiled runtime model (MonitorSpec) and its text form, the monitor
/// plan. See docs/plan-format.md for the file layout.
namespace hcmon::plan {

enum class EventKind { kPrediction, kFeedback, kSignal };

std::string_view to_string(EventKind kind);
std::optional<EventKind> parse_event_kind(std::string_view text);

/// What a monitored component must emit for its evaluators to run. Fields are
/// event paths: `prediction`, `confidence`, `label`, `ref_id`,
/// `features.<name>` or `signals.<name>`.
struct Probe {
  std::string component;
  std::vector<EventKind> kinds;    // sorted, unique
  std::vector<std::string> fields;  // sorted, unique

  bool operator==(const Probe&) const = default;
};

struct Baseline {
  std::string context;
  std::string dataset;
  std::string path;  // resolved against the context model's directory

  bool operator==(const Baseline&) const = default;
};

struct Evaluator {
  std::string id;  // the technical requirement id
  dsml::MetricRef metric;
  std::string scope;
  dsml::Window window;
  std::uint64_t min_samples = 1;
  std::vector<std::string> sensitive_attributes;
  std::optional<Baseline> baseline;
  std::string context;  // first context model attached to the scope, if any
  std::string deployment;

  metrics::MetricKind kind() const;
  bool operator==(const Evaluator&) const = default;
};

/// Event kinds and fields an evaluator reads.
struct Inputs {
  std::vector<EventKind> kinds;
  std::vector<std::string> fields;
};
Inputs inputs_of(const Evaluator& evaluator);

struct ViolationRule {
  std::string id;  // <techreq>/<requirement>
  std::string evaluator;
  dsml::Threshold threshold;
  std::vector<std::string> hcr_chain;  // most specific first
  dsml::Criticality severity = dsml::Criticality::kMedium;

  bool operator==(const ViolationRule&) const = default;
};

struct AdaptationRule {
  std::string id;  // <rule>/<adaptation>
  std::string on;
  dsml::AdaptationAction action;
  std::uint64_t cooldown_seconds = dsml::kDefaultCooldownSeconds;

  bool operator==(const AdaptationRule&) const = default;
};

struct MonitorSpec {
  std::string monitor_id;
  std::vector<Probe> probes;
  std::vector<Evaluator> evaluators;
  std::vector<ViolationRule> rules;
  std::vector<AdaptationRule> adaptation_rules;
  /// Keyed by rule id: the trace through that rule's technical requirement.
  std::map<std::string, weaver::TraceChain> trace_index;

  const Evaluator* evaluator(std::string_view id) const;
  const ViolationRule* rule(std::string_view id) const;

  bool operator==(const MonitorSpec&) const = default;
};

struct CompileResult {
  std::optional<MonitorSpec> spec;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return spec.has_value(); }
};

/// Model-to-model step. A woven model that still has errors is returned as
/// a failure carrying those errors.
CompileResult compile(const weaver::WovenModel& woven);

/// Model-to-text step: the canonical plan document.
std::string emit_plan(const MonitorSpec& spec);

struct LoadResult {
  std::optional<MonitorSpec> spec;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return spec.has_value(); }
};

LoadResult load_plan(std::string_view text);

/// Plan value escaping: space, `%`, `,` and control bytes become `%XX`.
std::string encode_value(std::string_view raw);
std::optional<std::string> decode_value(std::string_view encoded);

}  // namespace hcmon::plan
