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


#include "hcmon/engine.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "evaluator_state.hpp"
#include "hcmon/dsml/syntax.hpp"

namespace hcmon::engine {

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

BaselineSample extract_baseline(const plan::Evaluator& evaluator, std::string_view events) {
  using metrics::MetricKind;
  BaselineSample sample;
  const auto kind = evaluator.kind();
  const bool numeric_field = kind == MetricKind::kKsDrift || kind == MetricKind::kPsiDrift;
  const bool predictions = kind == MetricKind::kPredictionDrift;
  if (!numeric_field && !predictions) return sample;
  const std::string field =
      numeric_field ? std::get<std::string>(evaluator.metric.args.at(0)) : std::string();

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < events.size()) {
    auto nl = events.find('\n', pos);
    if (nl == std::string_view::npos) nl = events.size();
    const auto line = events.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.empty()) continue;
    auto parsed = parse_event(line);
    if (!parsed.event) {
      throw EngineError(fmt::format("baseline line {}: {}", line_no, parsed.error));
    }
    const auto& e = *parsed.event;
    if (e.component != evaluator.scope || e.kind != EventKind::kPrediction) continue;
    if (numeric_field) {
      const auto it = e.features.find(field);
      if (it == e.features.end()) continue;
      if (const auto* d = std::get_if<double>(&it->second)) sample.numbers.push_back(*d);
    } else if (e.prediction) {
      sample.categories.push_back(category_text(*e.prediction));
    }
  }
  return sample;
}

namespace {

Json group_stats_json(const std::map<std::string, metrics::GroupStat>& stats) {
  Json out = Json::object();
  for (const auto& [g, s] : stats) out[g] = Json{{"n", s.n}, {"rate", s.rate}};
  return out;
}

}  // namespace

Json to_json(const MetricResult& r) {
  Json j{{"ts", r.ts}, {"event", r.event}, {"evaluator", r.evaluator}, {"value", r.value},
         {"n", r.n}};
  if (!r.group_stats.empty()) j["group_stats"] = group_stats_json(r.group_stats);
  return j;
}

Json to_json(const ViolationRecord& r) {
  Json j;
  j["ts"] = r.ts;
  j["event"] = r.event;
  j["kind"] = r.kind == RecordKind::kViolation ? "violation" : "evaluator error";
  j["monitor_id"] = r.monitor_id;
  j["rule"] = r.rule;
  j["techreq"] = r.techreq;
  j["hcr_chain"] = r.hcr_chain;
  j["severity"] = std::string(dsml::to_string(r.severity));
  j["metric"] = r.metric;
  j["metric_kind"] = std::string(metrics::to_string(r.family));
  j["value"] = r.value ? Json(*r.value) : Json(nullptr);
  j["threshold"] = dsml::to_string(r.threshold);
  j["window"] = dsml::to_string(r.window);
  j["n"] = r.n;

  Json evidence;
  evidence["group_stats"] = group_stats_json(r.evidence.group_stats);
  if (r.evidence.baseline) {
    evidence["baseline"] = Json{{"context", r.evidence.baseline->context},
                                {"dataset", r.evidence.baseline->dataset},
                                {"n", r.evidence.baseline->n}};
  } else {
    evidence["baseline"] = nullptr;
  }
  evidence["sample_digest"] = r.evidence.sample_digest;
  if (!r.evidence.error.empty()) evidence["error"] = r.evidence.error;
  j["evidence"] = std::move(evidence);

  if (r.classification) {
    const auto& c = *r.classification;
    if (c.fixable) {
      j["classification"] = Json{{"type", "fixable"},
                                 {"adaptation", c.adaptation},
                                 {"action", dsml::to_string(c.action)}};
    } else {
      j["classification"] = Json{{"type", "unfixable"}, {"reason", c.reason}};
    }
  } else {
    j["classification"] = nullptr;
  }
  if (r.outcome) {
    Json o{{"adaptation", r.outcome->adaptation},
           {"action", r.outcome->action},
           {"status", r.outcome->status()}};
    if (!r.outcome->applied) o["reason"] = r.outcome->reason;
    j["action_outcome"] = std::move(o);
  } else {
    j["action_outcome"] = nullptr;
  }
  return j;
}

Engine::Engine(plan::MonitorSpec spec, const FileReader& read, EngineOptions options)
    : spec_(std::move(spec)), options_(options) {
  if (options_.hysteresis < 1) throw EngineError("hysteresis must be at least 1");
  std::map<std::string, std::string> files;
  for (std::size_t i = 0; i < spec_.evaluators.size(); ++i) {
    const auto& e = spec_.evaluators[i];
    BaselineSample sample;
    std::optional<BaselineSummary> summary;
    if (e.baseline) {
      auto it = files.find(e.baseline->path);
      if (it == files.end()) {
        try {
          it = files.emplace(e.baseline->path, read(e.baseline->path)).first;
        } catch (const std::exception& err) {
          throw EngineError(fmt::format("baseline {} for '{}': {}", e.baseline->path, e.id,
                                        err.what()));
        }
      }
      try {
        sample = extract_baseline(e, it->second);
      } catch (const EngineError& err) {
        throw EngineError(fmt::format("{}: {}", e.baseline->path, err.what()));
      }
      summary = BaselineSummary{e.baseline->context, e.baseline->dataset, sample.size()};
    }
    evaluators_.push_back(make_state(e, sample, options_));
    baselines_.push_back(std::move(summary));
    evaluators_by_component_[e.scope].push_back(i);
  }
  rules_by_evaluator_.resize(spec_.evaluators.size());
  for (std::size_t r = 0; r < spec_.rules.size(); ++r) {
    const auto& rule = spec_.rules[r];
    std::size_t e = 0;
    while (e < spec_.evaluators.size() && spec_.evaluators[e].id != rule.evaluator) ++e;
    if (e == spec_.evaluators.size()) {
      throw EngineError(fmt::format("rule '{}' names unknown evaluator", rule.id));
    }
    rules_by_evaluator_[e].push_back(rules_.size());
    rules_.push_back(RuleState{r});
  }
  for (const auto& p : spec_.probes) probe_kinds_[p.component] = p.kinds;
}

Engine::~Engine() = default;
Engine::Engine(Engine&&) noexcept = default;
Engine& Engine::operator=(Engine&&) noexcept = default;

StepOutput Engine::ingest_line(std::string_view line) {
  auto parsed = parse_event(line);
  if (parsed.event) return ingest(*parsed.event);
  ++counters_.ingested;
  ++counters_.malformed;
  StepOutput out;
  out.log.push_back({Severity::kWarning, last_ts_,
                     fmt::format("malformed event #{}: {}", counters_.ingested, parsed.error)});
  return out;
}

StepOutput Engine::drop(const Event& event, const std::string& why) {
  ++counters_.dropped;
  StepOutput out;
  if (!why.empty() && warned_.insert(event.component).second) {
    out.log.push_back({Severity::kWarning, event.ts,
                       fmt::format("dropping events from {} component {}", why, event.component)});
  }
  return out;
}

StepOutput Engine::ingest(const Event& event) {
  if (const auto error = check_event(event); !error.empty()) {
    ++counters_.ingested;
    ++counters_.malformed;
    StepOutput out;
    out.log.push_back({Severity::kWarning, last_ts_,
                       fmt::format("malformed event #{}: {}", counters_.ingested, error)});
    return out;
  }
  ++counters_.ingested;
  if (shutdown_.count(event.component)) return drop(event, "shut down");
  const auto probe = probe_kinds_.find(event.component);
  if (probe == probe_kinds_.end()) return drop(event, "unknown");
  if (std::find(probe->second.begin(), probe->second.end(), event.kind) == probe->second.end()) {
    return drop(event, "");
  }
  ++counters_.routed;
  last_ts_ = event.ts;

  StepOutput out;
  for (auto i : evaluators_by_component_[event.component]) {
    if (evaluators_[i]->accept(event)) evaluate(i, event, out);
  }
  return out;
}

void Engine::evaluate(std::size_t i, const Event& event, StepOutput& out) {
  const auto& spec = spec_.evaluators[i];
  auto& state = *evaluators_[i];
  // Fairness evaluators apply min_samples per group inside the metric.
  if (!metrics::is_fairness(spec.kind()) && state.size() < spec.min_samples) return;

  std::optional<metrics::MetricValue> value;
  try {
    value = state.compute();
  } catch (const metrics::MetricError& err) {
    for (auto r : rules_by_evaluator_[i]) {
      auto& rs = rules_[r];
      if (rs.error_episode) continue;
      rs.error_episode = true;
      auto record = make_record(i, rs, event);
      record.kind = RecordKind::kEvaluatorError;
      record.n = state.size();
      record.evidence.error = err.what();
      out.log.push_back({Severity::kWarning, event.ts,
                         fmt::format("evaluator error {} rule={}: {}", spec.id, record.rule,
                                     err.what())});
      out.violations.push_back(std::move(record));
    }
    return;
  }
  if (!value) return;

  out.results.push_back(
      MetricResult{event.ts, counters_.ingested, spec.id, value->value, value->n,
                   value->group_stats});
  for (auto r : rules_by_evaluator_[i]) {
    auto& rs = rules_[r];
    rs.error_episode = false;
    const auto& rule = spec_.rules[rs.rule];
    if (rule.threshold.satisfied_by(value->value)) {
      rs.streak = 0;
      if (rs.violated) {
        rs.violated = false;
        out.log.push_back(
            {Severity::kInfo, event.ts,
             fmt::format("recovery rule={} event={} value={} (violated since event {})", rule.id,
                         counters_.ingested, dsml::syntax::format_number(value->value),
                         rs.since_event)});
      }
      continue;
    }
    ++rs.streak;
    if (rs.violated || rs.streak < options_.hysteresis) continue;
    rs.violated = true;
    rs.since_event = counters_.ingested;
    rs.since_ts = event.ts;
    auto record = make_record(i, rs, event);
    record.value = value->value;
    record.n = value->n;
    record.evidence.group_stats = value->group_stats;
    out.violations.push_back(std::move(record));
  }
}

ViolationRecord Engine::make_record(std::size_t i, const RuleState& rs, const Event& event) const {
  const auto& spec = spec_.evaluators[i];
  const auto& rule = spec_.rules[rs.rule];
  ViolationRecord r;
  r.ts = event.ts;
  r.event = counters_.ingested;
  r.monitor_id = spec_.monitor_id;
  r.rule = rule.id;
  r.techreq = spec.id;
  r.hcr_chain = rule.hcr_chain;
  r.severity = rule.severity;
  r.metric = dsml::to_string(spec.metric);
  r.family = metrics::catalog_entry(spec.kind()).family;
  r.threshold = rule.threshold;
  r.window = spec.window;
  r.evidence.baseline = baselines_[i];

  const auto& state = *evaluators_[i];
  std::uint64_t h = fnv1a("");
  for (std::size_t k = 0; k < state.size(); ++k) {
    h = fnv1a(state.item_text(k), h);
    h = fnv1a("\n", h);
  }
  r.evidence.sample_digest = fmt::format("fnv1a64:{:016x}", h);
  return r;
}

void Engine::mark_shutdown(const std::string& component) { shutdown_.insert(component); }

bool Engine::violated(std::string_view rule) const {
  for (const auto& rs : rules_) {
    if (spec_.rules[rs.rule].id == rule) return rs.violated;
  }
  return false;
}

std::size_t Engine::buffered_items() const {
  std::size_t n = 0;
  for (const auto& e : evaluators_) n += e->buffered();
  return n;
}

Json Engine::snapshot() const {
  Json doc;
  doc["monitor_id"] = spec_.monitor_id;
  doc["hysteresis"] = options_.hysteresis;
  doc["counters"] = Json{{"ingested", counters_.ingested},
                         {"routed", counters_.routed},
                         {"dropped", counters_.dropped},
                         {"malformed", counters_.malformed}};
  doc["last_ts"] = last_ts_;
  Json rules = Json::array();
  for (const auto& rs : rules_) {
    rules.push_back(Json{{"id", spec_.rules[rs.rule].id},
                         {"status", rs.violated ? "violated" : "satisfied"},
                         {"since_event", rs.since_event},
                         {"since_ts", rs.since_ts},
                         {"streak", rs.streak},
                         {"error_episode", rs.error_episode}});
  }
  doc["rules"] = std::move(rules);
  Json evaluators = Json::array();
  for (std::size_t i = 0; i < evaluators_.size(); ++i) {
    Json e{{"id", spec_.evaluators[i].id}};
    const Json saved = evaluators_[i]->save();
    for (const auto& [k, v] : saved.items()) e[k] = v;
    evaluators.push_back(std::move(e));
  }
  doc["evaluators"] = std::move(evaluators);
  doc["shutdown"] = Json(std::vector<std::string>(shutdown_.begin(), shutdown_.end()));
  doc["warned"] = Json(std::vector<std::string>(warned_.begin(), warned_.end()));
  return doc;
}

void Engine::restore(const Json& doc) {
  try {
    if (doc.at("monitor_id").get<std::string>() != spec_.monitor_id) {
      throw EngineError("snapshot belongs to monitor " + doc.at("monitor_id").get<std::string>());
    }
    const auto& rules = doc.at("rules");
    const auto& evaluators = doc.at("evaluators");
    if (rules.size() != rules_.size() || evaluators.size() != evaluators_.size()) {
      throw EngineError("snapshot does not match the plan");
    }
    const auto& c = doc.at("counters");
    counters_ = Counters{c.at("ingested").get<std::uint64_t>(), c.at("routed").get<std::uint64_t>(),
                         c.at("dropped").get<std::uint64_t>(),
                         c.at("malformed").get<std::uint64_t>()};
    last_ts_ = doc.at("last_ts").get<std::int64_t>();
    for (std::size_t r = 0; r < rules_.size(); ++r) {
      const auto& j = rules[r];
      auto& rs = rules_[r];
      if (j.at("id").get<std::string>() != spec_.rules[rs.rule].id) {
        throw EngineError("snapshot rule order does not match the plan");
      }
      rs.violated = j.at("status").get<std::string>() == "violated";
      rs.since_event = j.at("since_event").get<std::uint64_t>();
      rs.since_ts = j.at("since_ts").get<std::int64_t>();
      rs.streak = j.at("streak").get<int>();
      rs.error_episode = j.at("error_episode").get<bool>();
    }
    for (std::size_t i = 0; i < evaluators_.size(); ++i) {
      if (evaluators[i].at("id").get<std::string>() != spec_.evaluators[i].id) {
        throw EngineError("snapshot evaluator order does not match the plan");
      }
      evaluators_[i]->load(evaluators[i]);
    }
    const auto shutdown = doc.at("shutdown").get<std::vector<std::string>>();
    shutdown_ = {shutdown.begin(), shutdown.end()};
    const auto warned = doc.at("warned").get<std::vector<std::string>>();
    warned_ = {warned.begin(), warned.end()};
  } catch (const Json::exception& err) {
    throw EngineError(std::string("malformed snapshot: ") + err.what());
  }
}

}  // namespace hcmon::engine
