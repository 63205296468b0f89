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


#include "hcmon/dsml/model.hpp"

#include <cmath>

#include <fmt/format.h>

#include "hcmon/dsml/syntax.hpp"

namespace hcmon::dsml {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kHcr:
      return "hcr";
    case ModelKind::kTech:
      return "tech";
    case ModelKind::kArch:
      return "arch";
    case ModelKind::kDesign:
      return "design";
    case ModelKind::kContext:
      return "context";
  }
  return "hcr";
}

std::optional<ModelKind> parse_model_kind(std::string_view text) {
  for (auto k : kAllModelKinds) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

std::string_view to_string(Criticality c) {
  switch (c) {
    case Criticality::kLow:
      return "low";
    case Criticality::kMedium:
      return "medium";
    case Criticality::kHigh:
      return "high";
    case Criticality::kCritical:
      return "critical";
  }
  return "medium";
}

std::optional<Criticality> parse_criticality(std::string_view text) {
  for (auto c : {Criticality::kLow, Criticality::kMedium, Criticality::kHigh,
                 Criticality::kCritical}) {
    if (to_string(c) == text) return c;
  }
  return std::nullopt;
}

namespace {

constexpr std::pair<Category, std::string_view> kCategoryNames[] = {
    {Category::kFairness, "fairness"},         {Category::kPrivacy, "privacy"},
    {Category::kSafety, "safety"},             {Category::kWellbeing, "wellbeing"},
    {Category::kTransparency, "transparency"}, {Category::kValues, "values"},
};

}  // namespace

std::string to_string(const RequirementCategory& c) {
  for (const auto& [k, name] : kCategoryNames) {
    if (k == c.kind) return std::string(name);
  }
  return fmt::format("other({})", syntax::quote_string(c.other));
}

std::string to_string(const MetricRef& metric) {
  if (metric.args.empty()) return metric.name;
  std::string out = metric.name + "(";
  for (std::size_t i = 0; i < metric.args.size(); ++i) {
    if (i > 0) out += ", ";
    if (const auto* s = std::get_if<std::string>(&metric.args[i])) {
      out += *s;
    } else {
      out += syntax::format_number(std::get<double>(metric.args[i]));
    }
  }
  return out + ")";
}

std::string_view to_string(Comparator c) {
  switch (c) {
    case Comparator::kLt:
      return "<";
    case Comparator::kLe:
      return "<=";
    case Comparator::kGt:
      return ">";
    case Comparator::kGe:
      return ">=";
    case Comparator::kEq:
      return "==";
    case Comparator::kNe:
      return "!=";
  }
  return "<=";
}

std::optional<Comparator> parse_comparator(std::string_view text) {
  for (auto c : {Comparator::kLt, Comparator::kLe, Comparator::kGt, Comparator::kGe,
                 Comparator::kEq, Comparator::kNe}) {
    if (to_string(c) == text) return c;
  }
  return std::nullopt;
}

bool Threshold::satisfied_by(double value) const {
  switch (comparator) {
    case Comparator::kLt:
      return value < bound;
    case Comparator::kLe:
      return value <= bound;
    case Comparator::kGt:
      return value > bound;
    case Comparator::kGe:
      return value >= bound;
    case Comparator::kEq:
      return value == bound;
    case Comparator::kNe:
      return value != bound;
  }
  return false;
}

std::string to_string(const Threshold& t) {
  return fmt::format("{} {}", to_string(t.comparator), syntax::format_number(t.bound));
}

std::string to_string(const Window& w) {
  return fmt::format("{}:{}", w.mode == WindowMode::kCount ? "count" : "time", w.size);
}

std::string_view to_string(ActionKind kind) {
  switch (kind) {
    case ActionKind::kObfuscate:
      return "obfuscate";
    case ActionKind::kShutdown:
      return "shutdown";
    case ActionKind::kThrottle:
      return "throttle";
    case ActionKind::kSwitchThreshold:
      return "switch_threshold";
    case ActionKind::kNotify:
      return "notify";
  }
  return "notify";
}

std::optional<ActionKind> parse_action_kind(std::string_view text) {
  for (auto k : {ActionKind::kObfuscate, ActionKind::kShutdown, ActionKind::kThrottle,
                 ActionKind::kSwitchThreshold, ActionKind::kNotify}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

std::string to_string(const AdaptationAction& a) {
  switch (a.kind) {
    case ActionKind::kObfuscate:
    case ActionKind::kShutdown:
      return fmt::format("{}({})", to_string(a.kind), a.target);
    case ActionKind::kThrottle:
      return fmt::format("throttle({}, {})", a.target, syntax::format_number(a.value));
    case ActionKind::kSwitchThreshold:
      return fmt::format("switch_threshold({}, {}, {})", a.target, a.parameter,
                         syntax::format_number(a.value));
    case ActionKind::kNotify:
      return "notify";
  }
  return "notify";
}

std::string_view to_string(ComponentKind kind) {
  return kind == ComponentKind::kMl ? "ml" : "traditional";
}

std::string_view to_string(DatasetRole role) {
  return role == DatasetRole::kTraining ? "training" : "production";
}

const std::string& declaration_id(const Declaration& d) {
  return std::visit([](const auto& decl) -> const std::string& { return decl.id; }, d);
}

Location SourceModel::location_of(std::string_view id, std::string_view key) const {
  if (!key.empty()) {
    const auto it = source_span_index.find(fmt::format("{}:{}", id, key));
    if (it != source_span_index.end()) return it->second;
  }
  const auto it = source_span_index.find(std::string(id));
  return it == source_span_index.end() ? Location{} : it->second;
}

}  // namespace hcmon::dsml
