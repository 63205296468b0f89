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

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hcmon/dsml/syntax.hpp"
#include "hcmon/harness.hpp"

namespace hcmon::harness {

namespace {

constexpr std::size_t kPendingLimit = 1000;  // unanswered recognitions kept for feedback

/// Uniform in [0, 1) from the top 53 bits; same on every platform.
double uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Box-Muller, one value per pair of uniforms.
double normal(std::mt19937_64& rng, double mean, double sd) {
  const double u1 = uniform(rng);
  const double u2 = uniform(rng);
  return mean + sd * std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double round4(double x) { return std::round(x * 1e4) / 1e4; }

/// Index picked by `u` from weights summing to 1; rounding slack goes to the last.
std::size_t pick(const std::vector<double>& weights, double u) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) return i;
  }
  return weights.size() - 1;
}

}  // namespace

/// Generative parameters after the mutations active at one step.
struct Simulator::Effective {
  std::vector<double> group_proportion;
  std::vector<double> positive_rate;
  std::vector<double> feature_mean;
  std::vector<double> signal_mean;
  std::vector<double> flag_probability;
  std::vector<double> class_proportion;
};

Simulator::Simulator(ScenarioConfig config, std::vector<Mutation> mutations)
    : config_(std::move(config)), mutations_(std::move(mutations)), master_(config_.seed) {
  if (const auto problems = check_config(config_, mutations_); !problems.empty()) {
    throw ConfigError(problems.front());
  }
  double floor = 0.0;
  for (const auto& e : config_.emitters) {
    emitter_floor_.push_back(floor);
    floor += e.rate;
  }
}

std::int64_t Simulator::ts_of(std::uint64_t step) const {
  return config_.start_ts + static_cast<std::int64_t>(step) * config_.interval_ms;
}

Simulator::Effective Simulator::effective(std::uint64_t step) const {
  Effective e;
  for (const auto& g : config_.population.groups) {
    e.group_proportion.push_back(g.proportion);
    e.positive_rate.push_back(g.positive_rate);
  }
  for (const auto& f : config_.features) e.feature_mean.push_back(f.mean);
  for (const auto& s : config_.signals) e.signal_mean.push_back(s.mean);
  for (const auto& f : config_.flags) e.flag_probability.push_back(f.probability);
  for (const auto& k : config_.classes) e.class_proportion.push_back(k.proportion);

  const auto index = [](const auto& items, const std::string& name) {
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (items[i].name == name) return i;
    }
    return items.size();
  };
  for (const auto& m : mutations_) {
    if (!m.active(step)) continue;
    switch (m.type) {
      case MutationType::kBias:
        e.positive_rate[index(config_.population.groups, m.target)] = m.magnitude;
        break;
      case MutationType::kLeak:
        std::fill(e.flag_probability.begin(), e.flag_probability.end(), m.magnitude);
        break;
      case MutationType::kSpeed:
        e.signal_mean[index(config_.signals, "speed")] += m.magnitude;
        break;
      case MutationType::kDrift:
        e.feature_mean[index(config_.features, m.target)] += m.magnitude;
        break;
      case MutationType::kPrediction: {
        // Shift one class and rescale the rest so proportions still sum to 1.
        const auto k = index(config_.classes, m.target);
        const double before = e.class_proportion[k];
        const double after = std::clamp(before + m.magnitude, 0.0, 1.0);
        const double scale = before < 1.0 ? (1.0 - after) / (1.0 - before) : 0.0;
        for (std::size_t i = 0; i < e.class_proportion.size(); ++i) {
          e.class_proportion[i] = i == k ? after : e.class_proportion[i] * scale;
        }
        break;
      }
    }
  }
  return e;
}

std::optional<engine::Event> Simulator::next() {
  if (done()) return std::nullopt;
  const std::uint64_t s = step_++;
  std::mt19937_64 rng(master_());

  const double u = uniform(rng);
  const EmitterConfig* emitter = nullptr;
  for (std::size_t i = 0; i < config_.emitters.size(); ++i) {
    const auto& e = config_.emitters[i];
    const auto t = throttle_.find(e.component);
    const double rate = e.rate * (t == throttle_.end() ? 1.0 : t->second);
    if (u >= emitter_floor_[i] && u < emitter_floor_[i] + rate) emitter = &e;
  }
  if (emitter == nullptr || shutdown_.count(emitter->component) != 0) return std::nullopt;

  const Effective eff = effective(s);
  engine::Event ev;
  ev.ts = ts_of(s);
  ev.component = emitter->component;
  switch (emitter->role) {
    case Role::kRouting: {
      const auto g = pick(eff.group_proportion, uniform(rng));
      const bool served = uniform(rng) < eff.positive_rate[g];
      ev.features[config_.population.attribute] = config_.population.groups[g].name;
      for (std::size_t i = 0; i < config_.features.size(); ++i) {
        ev.features[config_.features[i].name] =
            round4(normal(rng, eff.feature_mean[i], config_.features[i].sd));
      }
      ev.prediction = served;
      break;
    }
    case Role::kRecognition: {
      const auto truth = pick(eff.class_proportion, uniform(rng));
      auto predicted = truth;
      if (uniform(rng) >= config_.recogniser.accuracy && config_.classes.size() > 1) {
        // A wrong answer is uniform over the other classes.
        const double others = static_cast<double>(config_.classes.size() - 1);
        const auto other = static_cast<std::size_t>(uniform(rng) * others);
        predicted = other >= truth ? other + 1 : other;
      }
      const auto& rc = config_.recogniser;
      ev.prediction = config_.classes[predicted].name;
      const double confidence = normal(rng, rc.confidence_mean, rc.confidence_sd);
      ev.confidence = round4(std::clamp(confidence, 0.0, 1.0));
      ev.ref_id = fmt::format("r{}", s);
      for (std::size_t i = 0; i < config_.flags.size(); ++i) {
        const bool raised = uniform(rng) < eff.flag_probability[i];
        const bool hidden = obfuscated_.count({ev.component, config_.flags[i].name}) != 0;
        ev.signals[config_.flags[i].name] = raised && !hidden;
      }
      pending_.emplace_back(*ev.ref_id, config_.classes[truth].name);
      if (pending_.size() > kPendingLimit) pending_.pop_front();
      break;
    }
    case Role::kFeedback: {
      if (pending_.empty()) return std::nullopt;
      ev.kind = engine::EventKind::kFeedback;
      ev.ref_id = pending_.front().first;
      ev.label = pending_.front().second;
      pending_.pop_front();
      break;
    }
    case Role::kNavigation: {
      ev.kind = engine::EventKind::kSignal;
      for (std::size_t i = 0; i < config_.signals.size(); ++i) {
        double v = normal(rng, eff.signal_mean[i], config_.signals[i].sd);
        if (const auto cap = limits_.find(config_.signals[i].name); cap != limits_.end()) {
          v = std::min(v, cap->second);
        }
        ev.signals[config_.signals[i].name] = round4(v);
      }
      break;
    }
  }
  return ev;
}

adapt::HandleResult Simulator::apply(const dsml::AdaptationAction& action,
                                     const std::string& target) {
  const auto has_role = [&](Role role) {
    return std::any_of(config_.emitters.begin(), config_.emitters.end(),
                       [&](const EmitterConfig& e) {
                         return e.component == target && e.role == role;
                       });
  };
  const bool known = std::any_of(config_.emitters.begin(), config_.emitters.end(),
                                 [&](const EmitterConfig& e) { return e.component == target; });
  const auto unsupported = [&] {
    return adapt::HandleResult{false, fmt::format("unsupported action {} on {}",
                                                  dsml::to_string(action), target)};
  };
  switch (action.kind) {
    case dsml::ActionKind::kNotify:
      return {};
    case dsml::ActionKind::kObfuscate: {
      const bool flag = std::any_of(config_.flags.begin(), config_.flags.end(),
                                    [&](const FlagSignal& f) { return f.name == action.target; });
      if (!flag || !has_role(Role::kRecognition)) return unsupported();
      obfuscated_.insert({target, action.target});
      return {};
    }
    case dsml::ActionKind::kShutdown:
      if (!known) return unsupported();
      shutdown_.insert(target);
      return {};
    case dsml::ActionKind::kThrottle:
      if (!known) return unsupported();
      if (!(action.value >= 0.0 && action.value <= 1.0)) {
        return {false, "throttle factor must be in [0, 1]"};
      }
      throttle_[target] = action.value;
      return {};
    case dsml::ActionKind::kSwitchThreshold: {
      // `<signal>_limit` caps a navigation signal.
      const std::string suffix = "_limit";
      const auto& p = action.parameter;
      const bool limit = p.size() > suffix.size() && p.ends_with(suffix);
      const auto signal = limit ? p.substr(0, p.size() - suffix.size()) : std::string();
      const bool exists = std::any_of(config_.signals.begin(), config_.signals.end(),
                                      [&](const Gaussian& g) { return g.name == signal; });
      if (!exists || !has_role(Role::kNavigation)) return unsupported();
      limits_[signal] = action.value;
      return {};
    }
  }
  return unsupported();
}

GroundTruth Simulator::truth() const {
  GroundTruth t;
  t.start_ts = config_.start_ts;
  t.interval_ms = config_.interval_ms;
  for (const auto& m : mutations_) {
    t.intervals.push_back(TruthInterval{m.id, injection_text(m),
                                        std::string(affected_kind(m.type)), m.onset,
                                        m.end(config_.n_events)});
  }
  return t;
}

Generated generate(const ScenarioConfig& config, const std::vector<Mutation>& mutations) {
  Simulator sim(config, mutations);
  Generated out;
  while (!sim.done()) {
    if (auto ev = sim.next()) out.lines.push_back(engine::serialize_event(*ev));
  }
  out.truth = sim.truth();
  return out;
}

}  // namespace hcmon::harness
