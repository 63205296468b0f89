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
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hcmon/diagnostic.hpp"

namespace hcmon::dsml {

enum class ModelKind { kHcr, kTech, kArch, kDesign, kContext };

inline constexpr ModelKind kAllModelKinds[] = {ModelKind::kHcr, ModelKind::kTech,
                                               ModelKind::kArch, ModelKind::kDesign,
                                               ModelKind::kContext};

std::string_view to_string(ModelKind kind);
std::optional<ModelKind> parse_model_kind(std::string_view text);

// --- HCR -------------------------------------------------------------------

enum class Category { kFairness, kPrivacy, kSafety, kWellbeing, kTransparency, kValues, kOther };

struct RequirementCategory {
  Category kind = Category::kOther;
  std::string other;  // label for kOther

  bool operator==(const RequirementCategory&) const = default;
};

enum class Criticality { kLow, kMedium, kHigh, kCritical };

std::string_view to_string(Criticality c);
std::optional<Criticality> parse_criticality(std::string_view text);
std::string to_string(const RequirementCategory& c);

struct Requirement {
  std::string id;
  std::string description;
  RequirementCategory category;
  Criticality severity = Criticality::kMedium;
  std::vector<Requirement> children;

  bool operator==(const Requirement&) const = default;
};

// --- TECH ------------------------------------------------------------------

using MetricArg = std::variant<std::string, double>;

struct MetricRef {
  std::string name;
  std::vector<MetricArg> args;

  bool operator==(const MetricRef&) const = default;
};

/// `demographic_parity`, `ks_drift(distance)`, `range_rate(speed, 0, 15)`
std::string to_string(const MetricRef& metric);

enum class Comparator { kLt, kLe, kGt, kGe, kEq, kNe };

std::string_view to_string(Comparator c);
std::optional<Comparator> parse_comparator(std::string_view text);

/// The satisfaction condition `value <cmp> bound`; a violation is its negation.
struct Threshold {
  Comparator comparator = Comparator::kLe;
  double bound = 0;

  bool satisfied_by(double value) const;
  bool operator==(const Threshold&) const = default;
};

std::string to_string(const Threshold& t);

enum class WindowMode { kCount, kTime };

struct Window {
  WindowMode mode = WindowMode::kCount;
  std::uint64_t size = 0;  // events, or seconds in time mode

  bool operator==(const Window&) const = default;
};

/// `count:2000` / `time:60`
std::string to_string(const Window& w);

enum class ActionKind { kObfuscate, kShutdown, kThrottle, kSwitchThreshold, kNotify };

std::string_view to_string(ActionKind kind);
std::optional<ActionKind> parse_action_kind(std::string_view text);

struct AdaptationAction {
  ActionKind kind = ActionKind::kNotify;
  std::string target;     // field for obfuscate, component otherwise, empty for notify
  std::string parameter;  // switch_threshold only
  double value = 0;       // throttle factor or switch_threshold value

  bool operator==(const AdaptationAction&) const = default;
};

/// `obfuscate(image_stored)`, `throttle(Navigator, 0.5)`, `notify`
std::string to_string(const AdaptationAction& a);

inline constexpr std::uint64_t kDefaultCooldownSeconds = 60;

struct AdaptationDecl {
  std::string id;
  AdaptationAction action;
  std::uint64_t cooldown_seconds = kDefaultCooldownSeconds;

  bool operator==(const AdaptationDecl&) const = default;
};

struct TechReq {
  std::string id;
  std::string description;
  std::optional<MetricRef> metric;
  std::optional<std::string> scope;
  std::optional<Threshold> threshold;
  std::optional<Window> window;
  std::optional<std::uint64_t> min_samples;
  std::vector<std::string> satisfies;
  std::vector<AdaptationDecl> adaptations;
  std::vector<TechReq> children;

  bool is_leaf() const { return children.empty(); }
  bool operator==(const TechReq&) const = default;
};

// --- ARCH ------------------------------------------------------------------

enum class ComponentKind { kMl, kTraditional };

std::string_view to_string(ComponentKind kind);

struct ArchNode {
  std::string id;
  std::string description;
  ComponentKind kind = ComponentKind::kTraditional;
  std::vector<std::string> implements;

  bool operator==(const ArchNode&) const = default;
};

struct Connector {
  std::string id;
  std::string from;
  std::string to;

  bool operator==(const Connector&) const = default;
};

// --- DESIGN ----------------------------------------------------------------

using ParamValue = std::variant<std::string, double>;

struct DesignSpec {
  std::string id;
  std::string description;
  std::string for_component;
  std::string algorithm;
  std::string framework;
  std::map<std::string, ParamValue> hyperparams;
  std::map<std::string, ParamValue> train_metrics;

  bool operator==(const DesignSpec&) const = default;
};

// --- CONTEXT ---------------------------------------------------------------

enum class DatasetRole { kTraining, kProduction };

std::string_view to_string(DatasetRole role);

struct Dataset {
  std::string name;
  std::string source;
  DatasetRole role = DatasetRole::kProduction;
  std::optional<std::string> baseline_path;

  bool operator==(const Dataset&) const = default;
};

struct ContextSpec {
  std::string id;
  std::string description;
  std::string for_component;
  std::string deployment;
  std::vector<Dataset> datasets;
  std::vector<std::string> sensitive_attributes;

  bool operator==(const ContextSpec&) const = default;
};

// --- model -----------------------------------------------------------------

using Declaration =
    std::variant<Requirement, TechReq, ArchNode, Connector, DesignSpec, ContextSpec>;

/// Declaration id regardless of alternative.
const std::string& declaration_id(const Declaration& d);

struct SourceModel {
  ModelKind kind = ModelKind::kHcr;
  std::string name;
  std::vector<Declaration> declarations;
  /// Declaration id -> location; `id:key` -> location of a property.
  std::map<std::string, Location> source_span_index;

  /// Looks up `id:key`, falling back to `id`, then to 1:1.
  Location location_of(std::string_view id, std::string_view key = {}) const;

  /// Structural equality; source spans are ignored.
  bool operator==(const SourceModel& other) const {
    return kind == other.kind && name == other.name && declarations == other.declarations;
  }
};

struct ParseResult {
  std::optional<SourceModel> model;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return model.has_value(); }
};

ParseResult parse_model(std::string_view text, std::optional<ModelKind> expected_kind = {});

/// Intra-model checks run before weaving.
std::vector<Diagnostic> validate_model(const SourceModel& model);

/// Canonical text: comments dropped, fixed property order, two-space indent.
std::string serialize_model(const SourceModel& model);

}  // namespace hcmon::dsml
