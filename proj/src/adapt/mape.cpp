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


#include <fmt/format.h>

#include "hcmon/adapt.hpp"
#include "hcmon/dsml/syntax.hpp"

namespace hcmon::adapt {

using dsml::ActionKind;
using dsml::syntax::format_number;
using engine::Classification;
using engine::Json;

std::string_view to_string(ComponentStatus status) {
  switch (status) {
    case ComponentStatus::kRunning:
      return "running";
    case ComponentStatus::kThrottled:
      return "throttled";
    case ComponentStatus::kShutdown:
      return "shutdown";
  }
  return "running";
}

bool MapeState::is_shutdown(const std::string& component) const {
  const auto it = components.find(component);
  return it != components.end() && it->second.status == ComponentStatus::kShutdown;
}

std::string action_target(const plan::AdaptationRule& rule, const plan::MonitorSpec& spec) {
  switch (rule.action.kind) {
    case ActionKind::kShutdown:
    case ActionKind::kThrottle:
    case ActionKind::kSwitchThreshold:
      return rule.action.target;
    case ActionKind::kObfuscate:
    case ActionKind::kNotify:
      break;
  }
  const auto* r = spec.rule(rule.on);
  const auto* e = r ? spec.evaluator(r->evaluator) : nullptr;
  return e ? e->scope : std::string();
}

Classification classify(const engine::ViolationRecord& violation, const plan::MonitorSpec& spec,
                        const MapeState& state) {
  Classification c;
  if (violation.kind == engine::RecordKind::kEvaluatorError) {
    c.reason = "evaluator error";
    return c;
  }
  for (const auto& a : spec.adaptation_rules) {
    if (a.on != violation.rule) continue;
    std::string blocked;
    if (state.is_shutdown(action_target(a, spec))) {
      blocked = "component shutdown";
    } else if (const auto it = state.last_action_ts.find(a.id);
               it != state.last_action_ts.end() &&
               violation.ts - it->second < static_cast<std::int64_t>(a.cooldown_seconds) * 1000) {
      blocked = "cooldown";
    }
    if (blocked.empty()) {
      c.fixable = true;
      c.adaptation = a.id;
      c.action = a.action;
      c.reason.clear();
      return c;
    }
    if (c.reason.empty()) c.reason = blocked;
  }
  if (c.reason.empty()) c.reason = "no rule";
  return c;
}

HandleResult DryRunHandle::apply(const dsml::AdaptationAction& action, const std::string& target) {
  applied_.push_back(fmt::format("{} {}", dsml::to_string(action), target));
  return {};
}

engine::ActionOutcome plan_and_execute(const Classification& c, const std::string& target,
                                       std::int64_t ts, SystemHandle& handle, MapeState& state) {
  engine::ActionOutcome outcome;
  outcome.adaptation = c.adaptation;
  outcome.action = dsml::to_string(c.action);
  if (!c.fixable) {
    outcome.reason = "not fixable";
    return outcome;
  }
  if (state.is_shutdown(target)) {
    outcome.reason = "component shutdown";
  } else {
    const auto result = handle.apply(c.action, target);
    outcome.applied = result.ok;
    outcome.reason = result.ok ? std::string() : result.reason;
  }
  if (outcome.applied) {
    if (c.action.kind == ActionKind::kShutdown) {
      state.components[target] = {ComponentStatus::kShutdown, 0.0};
    } else if (c.action.kind == ActionKind::kThrottle) {
      state.components[target] = {ComponentStatus::kThrottled, c.action.value};
    }
  }
  state.last_action_ts[c.adaptation] = ts;
  state.executed.push_back(
      ExecutedAction{ts, c.adaptation, outcome.action, target, outcome.applied, outcome.reason});
  while (state.executed.size() > MapeState::kHistory) state.executed.pop_front();
  return outcome;
}

std::string audit_line(const ExecutedAction& a) {
  std::string action = a.action;
  // Keep the action a single field.
  std::string compact;
  for (char ch : action) {
    if (ch != ' ') compact += ch;
  }
  const std::string outcome = a.applied ? "applied" : fmt::format("failed({})", a.reason);
  return fmt::format("{} {} {} {}", a.ts, compact, a.target, outcome);
}

Json to_json(const AlertRecord& a) {
  return Json{{"ts", a.ts},
              {"event", a.event},
              {"monitor_id", a.monitor_id},
              {"violation", a.violation},
              {"rule", a.rule},
              {"techreq", a.techreq},
              {"reason", a.reason},
              {"target", a.target},
              {"explanation", a.explanation},
              {"details", a.details}};
}

AlertRecord alert(const engine::ViolationRecord& v, const std::string& reason,
                  const plan::MonitorSpec& spec) {
  AlertRecord a;
  a.ts = v.ts;
  a.event = v.event;
  a.monitor_id = v.monitor_id;
  a.violation = fmt::format("{}@{}", v.rule, v.event);
  a.rule = v.rule;
  a.techreq = v.techreq;
  a.reason = reason;

  const auto* evaluator = spec.evaluator(v.techreq);
  const std::string value = v.value ? format_number(*v.value) : std::string("n/a");
  std::string text;
  if (v.kind == engine::RecordKind::kEvaluatorError) {
    text = fmt::format("evaluator {} failed at event {}: {}.", v.techreq, v.event,
                       v.evidence.error);
  } else {
    text = fmt::format("{} violated at event {}: {} = {}, required {}, window {}, n = {}.",
                       v.rule, v.event, v.metric, value, dsml::to_string(v.threshold),
                       dsml::to_string(v.window), v.n);
  }
  text += fmt::format(" Requirement chain: {}.", fmt::join(v.hcr_chain, " < "));
  if (!v.evidence.group_stats.empty()) {
    std::vector<std::string> groups;
    for (const auto& [g, s] : v.evidence.group_stats) {
      groups.push_back(fmt::format("{} n={} rate={}", g, s.n, format_number(s.rate)));
    }
    text += fmt::format(" Groups: {}.", fmt::join(groups, "; "));
  }
  if (evaluator != nullptr && !evaluator->context.empty()) {
    text += fmt::format(" Context {} for {}", evaluator->context, evaluator->scope);
    if (!evaluator->deployment.empty()) {
      text += fmt::format(", deployed {}", evaluator->deployment);
    }
    text += '.';
  }
  if (v.evidence.baseline) {
    text += fmt::format(" Baseline dataset {} ({} samples).", v.evidence.baseline->dataset,
                        v.evidence.baseline->n);
  }
  text += fmt::format(" Not fixed: {}.", reason);
  a.explanation = std::move(text);

  Json groups = Json::object();
  for (const auto& [g, s] : v.evidence.group_stats) groups[g] = Json{{"n", s.n}, {"rate", s.rate}};
  a.details = Json{{"metric", v.metric},
                   {"value", v.value ? Json(*v.value) : Json(nullptr)},
                   {"threshold", dsml::to_string(v.threshold)},
                   {"window", dsml::to_string(v.window)},
                   {"n", v.n},
                   {"hcr_chain", v.hcr_chain},
                   {"severity", std::string(dsml::to_string(v.severity))},
                   {"group_stats", std::move(groups)},
                   {"context", evaluator ? evaluator->context : std::string()},
                   {"deployment", evaluator ? evaluator->deployment : std::string()},
                   {"baseline_dataset",
                    v.evidence.baseline ? Json(v.evidence.baseline->dataset) : Json(nullptr)}};
  return a;
}

MapeLoop::Handled MapeLoop::handle(engine::ViolationRecord& v) {
  Handled out;
  state_.recent_violations.push_back(fmt::format("{}@{}", v.rule, v.event));
  while (state_.recent_violations.size() > MapeState::kHistory) {
    state_.recent_violations.pop_front();
  }

  auto c = classify(v, spec_, state_);
  v.classification = c;
  if (!c.fixable) {
    out.alerts.push_back(alert(v, c.reason, spec_));
    return out;
  }
  const plan::AdaptationRule* rule = nullptr;
  for (const auto& a : spec_.adaptation_rules) {
    if (a.id == c.adaptation) rule = &a;
  }
  if (c.action.kind == ActionKind::kNotify) {
    // Notifying is the alert itself; the cooldown still applies.
    state_.last_action_ts[c.adaptation] = v.ts;
    out.alerts.push_back(alert(v, "notify", spec_));
    return out;
  }
  const auto target = action_target(*rule, spec_);
  v.outcome = plan_and_execute(c, target, v.ts, handle_, state_);
  out.audit.push_back(audit_line(state_.executed.back()));
  if (v.outcome->applied && c.action.kind == ActionKind::kShutdown) {
    out.shutdowns.push_back(target);
  }
  if (!v.outcome->applied) {
    out.alerts.push_back(alert(v, "action failed: " + v.outcome->reason, spec_));
  }
  return out;
}

Json MapeLoop::snapshot() const {
  Json executed = Json::array();
  for (const auto& a : state_.executed) {
    executed.push_back(Json{{"ts", a.ts},
                            {"adaptation", a.adaptation},
                            {"action", a.action},
                            {"target", a.target},
                            {"applied", a.applied},
                            {"reason", a.reason}});
  }
  Json components = Json::object();
  for (const auto& [c, s] : state_.components) {
    components[c] = Json{{"status", std::string(to_string(s.status))}, {"factor", s.factor}};
  }
  Json cooldowns = Json::object();
  for (const auto& [id, ts] : state_.last_action_ts) cooldowns[id] = ts;
  return Json{{"recent_violations", Json(std::vector<std::string>(
                                        state_.recent_violations.begin(),
                                        state_.recent_violations.end()))},
              {"executed", std::move(executed)},
              {"last_action_ts", std::move(cooldowns)},
              {"components", std::move(components)}};
}

void MapeLoop::restore(const Json& doc) {
  MapeState s;
  try {
    for (const auto& v : doc.at("recent_violations")) {
      s.recent_violations.push_back(v.get<std::string>());
    }
    for (const auto& a : doc.at("executed")) {
      s.executed.push_back(ExecutedAction{a.at("ts").get<std::int64_t>(),
                                          a.at("adaptation").get<std::string>(),
                                          a.at("action").get<std::string>(),
                                          a.at("target").get<std::string>(),
                                          a.at("applied").get<bool>(),
                                          a.at("reason").get<std::string>()});
    }
    for (const auto& [id, ts] : doc.at("last_action_ts").items()) {
      s.last_action_ts[id] = ts.get<std::int64_t>();
    }
    for (const auto& [c, j] : doc.at("components").items()) {
      const auto status = j.at("status").get<std::string>();
      ComponentState cs;
      cs.factor = j.at("factor").get<double>();
      if (status == "shutdown") {
        cs.status = ComponentStatus::kShutdown;
      } else if (status == "throttled") {
        cs.status = ComponentStatus::kThrottled;
      } else if (status != "running") {
        throw engine::EngineError("unknown component status " + status);
      }
      s.components[c] = cs;
    }
  } catch (const Json::exception& err) {
    throw engine::EngineError(std::string("malformed adaptation snapshot: ") + err.what());
  }
  state_ = std::move(s);
}

}  // namespace hcmon::adapt
