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
#include <string>
#include <vector>

#include "hcmon/engine.hpp"
#include "hcmon/plan.hpp"

/// Classification of violations and the MAPE-K loop that acts on them.
namespace hcmon::adapt {

enum class ComponentStatus { kRunning, kThrottled, kShutdown };

std::string_view to_string(ComponentStatus status);

struct ComponentState {
  ComponentStatus status = ComponentStatus::kRunning;
  double factor = 1.0;  // emission factor while throttled

  bool operator==(const ComponentState&) const = default;
};

struct ExecutedAction {
  std::int64_t ts = 0;
  std::string adaptation;
  std::string action;  // rendered, e.g. obfuscate(image_stored)
  std::string target;  // component the action was applied to
  bool applied = false;
  std::string reason;

  bool operator==(const ExecutedAction&) const = default;
};

/// The Knowledge part of MAPE-K.
struct MapeState {
  static constexpr std::size_t kHistory = 256;

  std::deque<std::string> recent_violations;  // "<rule>@<event>", newest last
  std::deque<ExecutedAction> executed;        // newest last
  std::map<std::string, std::int64_t> last_action_ts;  // by adaptation rule id
  std::map<std::string, ComponentState> components;    // absent means running

  bool is_shutdown(const std::string& component) const;
  bool operator==(const MapeState&) const = default;
};

/// Component an adaptation acts on: the named component for shutdown,
/// throttle and switch_threshold, otherwise the evaluator's scope.
std::string action_target(const plan::AdaptationRule& rule, const plan::MonitorSpec& spec);

/// First adaptation rule on the violation's rule whose target is up and
/// whose cooldown has elapsed; otherwise unfixable with the reason that
/// blocked the first candidate ("no rule", "cooldown", "component shutdown").
/// Evaluator errors are always unfixable.
engine::Classification classify(const engine::ViolationRecord& violation,
                                 const plan::MonitorSpec& spec, const MapeState& state);

struct HandleResult {
  bool ok = true;
  std::string reason;
};

/// The controllable system. Implementations apply one action at a time.
class SystemHandle {
 public:
  virtual ~SystemHandle() = default;
  virtual HandleResult apply(const dsml::AdaptationAction& action, const std::string& target) = 0;
};

/// Accepts every action and remembers it; used when no live system is attached.
class DryRunHandle final : public SystemHandle {
 public:
  HandleResult apply(const dsml::AdaptationAction& action, const std::string& target) override;
  const std::vector<std::string>& applied() const { return applied_; }

 private:
  std::vector<std::string> applied_;
};

/// Executes a fixable classification against `handle` and records it in
/// `state`. Actions against a shut-down component fail without reaching the
/// handle.
engine::ActionOutcome plan_and_execute(const engine::Classification& classification,
                                       const std::string& target, std::int64_t ts,
                                       SystemHandle& handle, MapeState& state);

struct AlertRecord {
  std::int64_t ts = 0;
  std::uint64_t event = 0;
  std::string monitor_id;
  std::string violation;  // <rule>@<event>
  std::string rule;
  std::string techreq;
  std::string reason;
  std::string target = "developers";
  std::string explanation;
  engine::Json details;
};

engine::Json to_json(const AlertRecord& alert);

AlertRecord alert(const engine::ViolationRecord& violation, const std::string& reason,
                  const plan::MonitorSpec& spec);

/// `ts action target outcome`
std::string audit_line(const ExecutedAction& action);

class MapeLoop {
 public:
  MapeLoop(const plan::MonitorSpec& spec, SystemHandle& handle) : spec_(spec), handle_(handle) {}

  struct Handled {
    std::vector<AlertRecord> alerts;
    std::vector<std::string> audit;
    std::vector<std::string> shutdowns;  // components newly shut down
  };

  /// Classifies `violation`, fills in its classification and outcome, and
  /// returns what has to be written or propagated.
  Handled handle(engine::ViolationRecord& violation);

  const MapeState& state() const { return state_; }
  engine::Json snapshot() const;
  void restore(const engine::Json& document);

 private:
  const plan::MonitorSpec& spec_;
  SystemHandle& handle_;
  MapeState state_;
};

}  // namespace hcmon::adapt
