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


#include <algorithm>
#include <filesystem>
#include <set>

#include <fmt/format.h>

#include "hcmon/plan.hpp"

namespace hcmon::plan {

using dsml::ModelKind;
using weaver::EdgeType;
using weaver::NodeType;

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::kPrediction:
      return "prediction";
    case EventKind::kFeedback:
      return "feedback";
    case EventKind::kSignal:
      return "signal";
  }
  return "prediction";
}

std::optional<EventKind> parse_event_kind(std::string_view text) {
  for (auto k : {EventKind::kPrediction, EventKind::kFeedback, EventKind::kSignal}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

metrics::MetricKind Evaluator::kind() const {
  const auto* entry = metrics::find_metric(metric.name);
  if (entry == nullptr) throw std::logic_error("evaluator with unknown metric " + metric.name);
  return entry->kind;
}

Inputs inputs_of(const Evaluator& e) {
  using metrics::MetricKind;
  auto field_arg = [&e] { return std::get<std::string>(e.metric.args.at(0)); };
  Inputs in;
  switch (e.kind()) {
    case MetricKind::kDemographicParity:
    case MetricKind::kDisparateImpact:
      in.kinds = {EventKind::kPrediction};
      in.fields.push_back("prediction");
      for (const auto& a : e.sensitive_attributes) in.fields.push_back("features." + a);
      break;
    case MetricKind::kKsDrift:
    case MetricKind::kPsiDrift:
      in.kinds = {EventKind::kPrediction};
      in.fields = {"features." + field_arg()};
      break;
    case MetricKind::kPredictionDrift:
      in.kinds = {EventKind::kPrediction};
      in.fields = {"prediction"};
      break;
    case MetricKind::kAccuracy:
      in.kinds = {EventKind::kPrediction, EventKind::kFeedback};
      in.fields = {"label", "prediction", "ref_id"};
      break;
    case MetricKind::kMeanConfidence:
      in.kinds = {EventKind::kPrediction};
      in.fields = {"confidence"};
      break;
    case MetricKind::kRangeRate:
    case MetricKind::kFlagRate:
      in.kinds = {EventKind::kPrediction, EventKind::kSignal};
      in.fields = {"signals." + field_arg()};
      break;
  }
  std::sort(in.fields.begin(), in.fields.end());
  in.fields.erase(std::unique(in.fields.begin(), in.fields.end()), in.fields.end());
  return in;
}

const Evaluator* MonitorSpec::evaluator(std::string_view id) const {
  for (const auto& e : evaluators) {
    if (e.id == id) return &e;
  }
  return nullptr;
}

const ViolationRule* MonitorSpec::rule(std::string_view id) const {
  for (const auto& r : rules) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

namespace {

class Compiler {
 public:
  explicit Compiler(const weaver::WovenModel& w) : w_(w) {}

  CompileResult run() {
    MonitorSpec spec;
    spec.monitor_id = w_.file(ModelKind::kArch).model.name;
    for (std::size_t i = 0; i < w_.nodes.size(); ++i) {
      const auto& node = w_.nodes[i];
      if (node.type != NodeType::kTechReq || !node.leaf) continue;
      const auto satisfied = w_.targets(i, EdgeType::kSatisfies);
      // Unlinked leaves were already reported by validation; they have no
      // requirement to attach a rule to.
      if (satisfied.empty()) continue;
      auto evaluator = make_evaluator(i);
      if (!evaluator) continue;
      add_rules(spec, i, satisfied);
      spec.evaluators.push_back(std::move(*evaluator));
    }
    spec.probes = derive_probes(spec.evaluators);
    if (has_errors(diagnostics_)) return {std::nullopt, std::move(diagnostics_)};
    return {std::move(spec), std::move(diagnostics_)};
  }

 private:
  void error(const std::string& techreq, std::string code, std::string message) {
    const auto& file = w_.file(ModelKind::kTech);
    auto d = make_error(std::move(code), std::move(message),
                        file.model.location_of(techreq, "metric"));
    d.file = file.path;
    diagnostics_.push_back(std::move(d));
  }

  std::string resolve_path(const std::string& relative) const {
    namespace fs = std::filesystem;
    const fs::path given(relative);
    const auto& context_path = w_.file(ModelKind::kContext).path;
    if (given.is_absolute() || context_path.empty()) return given.lexically_normal().string();
    return (fs::path(context_path).parent_path() / given).lexically_normal().string();
  }

  std::optional<Evaluator> make_evaluator(std::size_t node) {
    const auto& t = w_.techreq(node);
    Evaluator e;
    e.id = t.id;
    e.metric = *t.metric;
    e.scope = *t.scope;
    e.window = *t.window;
    e.min_samples = t.min_samples.value_or(1);

    const auto scope = w_.resolve(*t.scope, ModelKind::kArch);
    std::vector<std::size_t> contexts;
    if (scope) {
      e.scope = w_.nodes[*scope].id;
      contexts = w_.targets(*scope, EdgeType::kContextualizedBy);
    }
    for (auto c : contexts) {
      const auto& ctx = w_.context(c);
      if (e.context.empty()) {
        e.context = ctx.id;
        e.deployment = ctx.deployment;
      }
      for (const auto& attr : ctx.sensitive_attributes) {
        if (std::find(e.sensitive_attributes.begin(), e.sensitive_attributes.end(), attr) ==
            e.sensitive_attributes.end()) {
          e.sensitive_attributes.push_back(attr);
        }
      }
      if (e.baseline) continue;
      for (const auto& ds : ctx.datasets) {
        if (ds.role == dsml::DatasetRole::kTraining && ds.baseline_path) {
          e.baseline = Baseline{ctx.id, ds.name, resolve_path(*ds.baseline_path)};
          break;
        }
      }
    }

    const auto kind = e.kind();
    if (metrics::is_fairness(kind) && e.sensitive_attributes.empty()) {
      error(t.id, "missing-sensitive-attributes",
            fmt::format("fairness metric of '{}' needs sensitive_attributes in a context for '{}'",
                        t.id, e.scope));
      return std::nullopt;
    }
    if (metrics::requires_baseline(kind) && !e.baseline) {
      error(t.id, "missing-baseline",
            fmt::format("drift metric of '{}' needs a training baseline dataset for '{}'", t.id,
                        e.scope));
      return std::nullopt;
    }
    return e;
  }

  void add_rules(MonitorSpec& spec, std::size_t tech_node,
                 const std::vector<std::size_t>& satisfied) {
    const auto& t = w_.techreq(tech_node);
    // Keep the order in which `satisfies` lists the requirements.
    std::vector<std::size_t> ordered;
    for (const auto& ref : t.satisfies) {
      const auto r = w_.resolve(ref, ModelKind::kHcr);
      if (r && std::find(satisfied.begin(), satisfied.end(), *r) != satisfied.end() &&
          std::find(ordered.begin(), ordered.end(), *r) == ordered.end()) {
        ordered.push_back(*r);
      }
    }
    for (auto req : ordered) {
      ViolationRule rule;
      rule.id = fmt::format("{}/{}", t.id, w_.nodes[req].id);
      rule.evaluator = t.id;
      rule.threshold = *t.threshold;
      rule.severity = dsml::Criticality::kLow;
      for (std::optional<std::size_t> at = req; at; at = w_.nodes[*at].parent) {
        rule.hcr_chain.push_back(w_.nodes[*at].id);
        rule.severity = std::max(rule.severity, w_.requirement(*at).severity);
      }
      spec.trace_index[rule.id] = weaver::trace_link(w_, w_.nodes[req].id, t.id);
      for (const auto& a : t.adaptations) {
        spec.adaptation_rules.push_back(
            AdaptationRule{fmt::format("{}/{}", rule.id, a.id), rule.id, a.action,
                           a.cooldown_seconds});
      }
      spec.rules.push_back(std::move(rule));
    }
  }

  std::vector<Probe> derive_probes(const std::vector<Evaluator>& evaluators) const {
    std::map<std::string, std::pair<std::set<EventKind>, std::set<std::string>>> by_component;
    for (const auto& e : evaluators) {
      const auto in = inputs_of(e);
      auto& [kinds, fields] = by_component[e.scope];
      kinds.insert(in.kinds.begin(), in.kinds.end());
      fields.insert(in.fields.begin(), in.fields.end());
    }
    std::vector<Probe> probes;
    for (const auto& c : w_.components) {
      const auto it = by_component.find(c.id);
      if (it == by_component.end()) continue;
      const auto& [kinds, fields] = it->second;
      probes.push_back(Probe{c.id, {kinds.begin(), kinds.end()}, {fields.begin(), fields.end()}});
    }
    return probes;
  }

  const weaver::WovenModel& w_;
  std::vector<Diagnostic> diagnostics_;
};

}  // namespace

CompileResult compile(const weaver::WovenModel& woven) {
  if (!woven.compilable()) {
    std::vector<Diagnostic> errors;
    for (const auto& d : woven.diagnostics) {
      if (d.severity == Severity::kError) errors.push_back(d);
    }
    return {std::nullopt, std::move(errors)};
  }
  return Compiler(woven).run();
}

}  // namespace hcmon::plan
