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


#include "hcmon/runner.hpp"

#include <fmt/format.h>

#include <cctype>

namespace hcmon::runtime {

using engine::Json;

namespace {

std::string upper(std::string_view text) {
  std::string out(text);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

Json to_json(const RunSummary& s) {
  return Json{{"events", s.events},           {"routed", s.routed},
              {"dropped", s.dropped},         {"malformed", s.malformed},
              {"results", s.results},         {"violations", s.violations},
              {"adaptations", s.adaptations}, {"alerts", s.alerts}};
}

void Monitor::feed_line(std::string_view line) { consume(engine_.ingest_line(line)); }

void Monitor::feed(const engine::Event& event) { consume(engine_.ingest(event)); }

void Monitor::consume(engine::StepOutput out) {
  for (const auto& l : out.log) {
    if (sinks_.log) {
      *sinks_.log << fmt::format("{} {} {}\n", upper(to_string(l.severity)), l.ts, l.text);
    }
  }
  results_ += out.results.size();
  if (sinks_.results) {
    for (const auto& r : out.results) *sinks_.results << to_json(r).dump() << '\n';
  }
  for (auto& v : out.violations) {
    auto handled = mape_.handle(v);
    for (const auto& c : handled.shutdowns) engine_.mark_shutdown(c);
    ++violations_;
    if (v.outcome) ++adaptations_;
    alerts_ += handled.alerts.size();
    if (sinks_.violations) *sinks_.violations << to_json(v).dump() << '\n';
    if (sinks_.alerts) {
      for (const auto& a : handled.alerts) *sinks_.alerts << to_json(a).dump() << '\n';
    }
    if (sinks_.audit) {
      for (const auto& line : handled.audit) *sinks_.audit << line << '\n';
    }
    if (on_violation) on_violation(v);
  }
}

RunSummary Monitor::summary() const {
  const auto& c = engine_.counters();
  return RunSummary{c.ingested, c.routed,      c.dropped,    c.malformed,
                    results_,   violations_,   adaptations_, alerts_};
}

void Monitor::flush() {
  for (auto* s : {sinks_.violations, sinks_.alerts, sinks_.audit, sinks_.results, sinks_.log}) {
    if (s) s->flush();
  }
}

Json Monitor::snapshot() const {
  return Json{{"engine", engine_.snapshot()},
              {"adaptation", mape_.snapshot()},
              {"totals", Json{{"results", results_},
                              {"violations", violations_},
                              {"adaptations", adaptations_},
                              {"alerts", alerts_}}}};
}

void Monitor::restore(const Json& doc) {
  try {
    engine_.restore(doc.at("engine"));
    mape_.restore(doc.at("adaptation"));
    const auto& t = doc.at("totals");
    results_ = t.at("results").get<std::uint64_t>();
    violations_ = t.at("violations").get<std::uint64_t>();
    adaptations_ = t.at("adaptations").get<std::uint64_t>();
    alerts_ = t.at("alerts").get<std::uint64_t>();
  } catch (const Json::exception& err) {
    throw engine::EngineError(std::string("malformed snapshot: ") + err.what());
  }
  // Shutdowns recorded by the adaptation loop must keep events dropped.
  for (const auto& [component, state] : mape_.state().components) {
    if (state.status == adapt::ComponentStatus::kShutdown) engine_.mark_shutdown(component);
  }
}

bool StreamSource::next(std::string& line) {
  if (!std::getline(in_, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

RunSummary run_stream(Monitor& monitor, LineSource& source, const std::atomic<bool>* stop) {
  std::string line;
  while (!(stop && stop->load()) && source.next(line)) {
    if (line.empty()) continue;
    monitor.feed_line(line);
  }
  monitor.flush();
  return monitor.summary();
}

}  // namespace hcmon::runtime
