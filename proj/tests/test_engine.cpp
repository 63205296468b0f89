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


#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "hcmon/engine.hpp"

using namespace hcmon;
using namespace hcmon::engine;

namespace {

const char* kHcr = R"(model hcr H;
requirement Fair { category: fairness; severity: high; }
requirement Private { category: privacy; severity: critical; }
requirement Safe { category: safety; severity: critical; }
requirement Right { category: wellbeing; severity: low; }
requirement Stable { category: fairness; severity: medium; })";

const char* kTech = R"(model tech T;
techreq Parity { metric: demographic_parity; scope: Router; threshold: <= 0.1; window: 8 ev;
  min_samples: 4; satisfies: Fair; }
techreq Leak { metric: flag_rate(stored); scope: Cam; threshold: <= 0.2; window: 10 ev;
  min_samples: 5; satisfies: Private; }
techreq Fast { metric: range_rate(speed, 0, 10); scope: Nav; threshold: <= 0.5; window: 2 s;
  satisfies: Safe; }
techreq Acc { metric: accuracy; scope: Cam; threshold: >= 0.5; window: 4 ev; min_samples: 4;
  satisfies: Right; }
techreq Dist { metric: ks_drift(distance); scope: Router; threshold: <= 0.5; window: 10 ev;
  min_samples: 10; satisfies: Stable; })";

const char* kArch = R"(model arch A;
component Router { kind: ml; implements: Parity, Dist; }
component Cam { kind: ml; implements: Leak, Acc; }
component Nav { kind: ml; implements: Fast; })";

const char* kContext = R"(model context C;
context Routing { for: Router; sensitive_attributes: area;
  dataset Past { role: training; baseline: "past.jsonl"; } })";

plan::MonitorSpec spec() {
  static const auto compiled = [] {
    auto r = plan::compile(weaver::weave(
        {fixture::source("/m/h.hcm", kHcr), fixture::source("/m/t.hcm", kTech),
         fixture::source("/m/a.hcm", kArch), fixture::source("/m/d.hcm", "model design D;"),
         fixture::source("/m/c.hcm", kContext)}));
    if (!r.ok()) throw std::runtime_error("engine fixture does not compile");
    return *r.spec;
  }();
  return compiled;
}

std::string baseline_text() {
  std::string out;
  for (int i = 0; i < 50; ++i) {
    Event e;
    e.ts = i;
    e.component = "Router";
    e.features["distance"] = i / 50.0;
    e.features["area"] = std::string("A");
    e.prediction = true;
    out += serialize_event(e) + "\n";
  }
  return out;
}

Engine make(int hysteresis = 3, const std::string& baseline = baseline_text()) {
  EngineOptions options;
  options.hysteresis = hysteresis;
  return Engine(spec(), [baseline](const std::string&) { return baseline; }, options);
}

Event routed(std::int64_t ts, const std::string& area, bool served, double distance = 0.5) {
  Event e;
  e.ts = ts;
  e.component = "Router";
  e.features["area"] = area;
  e.features["distance"] = distance;
  e.prediction = served;
  return e;
}

Event speed(std::int64_t ts, double v) {
  Event e;
  e.ts = ts;
  e.component = "Nav";
  e.kind = EventKind::kSignal;
  e.signals["speed"] = v;
  return e;
}

// Group A served 3 of 4, group B 2 of 4: parity gap 0.25, window content
// unchanged by each step of the cycle.
const bool kUnfairA[] = {true, true, true, false};
const bool kUnfairB[] = {true, true, false, false};

Event unfair(std::int64_t i) {
  const auto k = i % 8;
  return k < 4 ? routed(i, "A", kUnfairA[k]) : routed(i, "B", kUnfairB[k - 4]);
}

Event fair(std::int64_t i) { return routed(i, i % 2 ? "A" : "B", i % 4 < 2); }

std::vector<ViolationRecord> rule_records(const StepOutput& out, const std::string& rule) {
  std::vector<ViolationRecord> r;
  for (const auto& v : out.violations) {
    if (v.rule == rule) r.push_back(v);
  }
  return r;
}

}  // namespace

TEST(Engine, RoutingAndConservation) {
  auto engine = make();
  engine.ingest(routed(1, "A", true));
  Event stranger = routed(2, "A", true);
  stranger.component = "Toaster";
  const auto warn = engine.ingest(stranger);
  ASSERT_EQ(warn.log.size(), 1u);
  EXPECT_EQ(warn.log[0].severity, Severity::kWarning);
  EXPECT_TRUE(engine.ingest(stranger).log.empty());  // warned once per component

  engine.ingest_line(R"({"ts":3,"component":"Cam","kind":"feedback","label":"x"})");
  engine.ingest_line("{not json");
  engine.ingest_line(R"({"ts":4,"component":"Router","kind":"prediction","prediction":true,)"
                     R"("colour":"red"})");
  Event feedback;
  feedback.component = "Cam";
  feedback.kind = EventKind::kFeedback;
  feedback.label = std::string("porch");
  engine.ingest(feedback);  // no ref_id

  const auto& c = engine.counters();
  EXPECT_EQ(c.ingested, 7u);
  EXPECT_EQ(c.routed, 1u);
  EXPECT_EQ(c.dropped, 2u);
  EXPECT_EQ(c.malformed, 4u);
}

TEST(Engine, WarmUpProducesNoResults) {
  auto engine = make();
  for (int i = 0; i < 9; ++i) {
    EXPECT_TRUE(engine.ingest(routed(i, "A", true)).results.empty()) << i;
  }
  Event cam;
  cam.component = "Cam";
  cam.prediction = std::string("porch");
  cam.signals["stored"] = false;
  for (int i = 0; i < 4; ++i) EXPECT_TRUE(engine.ingest(cam).results.empty());
  EXPECT_EQ(engine.ingest(cam).results.size(), 1u);
}

TEST(Engine, SustainedParityGapYieldsOneRecordAtThirdEvaluation) {
  auto engine = make();
  std::vector<ViolationRecord> records;
  std::vector<std::uint64_t> evaluations;
  for (int i = 0; i < 40; ++i) {
    const auto out = engine.ingest(unfair(i));
    for (const auto& r : out.results) {
      if (r.evaluator == "Parity") evaluations.push_back(r.event);
    }
    for (auto& v : rule_records(out, "Parity/Fair")) records.push_back(v);
  }
  ASSERT_GE(evaluations.size(), 3u);
  EXPECT_EQ(evaluations[0], 8u);
  ASSERT_EQ(records.size(), 1u);
  const auto& v = records[0];
  EXPECT_EQ(v.event, evaluations[2]);
  EXPECT_DOUBLE_EQ(*v.value, 0.25);
  EXPECT_EQ(v.n, 8u);
  EXPECT_EQ(v.hcr_chain, std::vector<std::string>{"Fair"});
  EXPECT_EQ(v.severity, dsml::Criticality::kHigh);
  EXPECT_EQ(v.family, metrics::MetricFamily::kFairness);
  EXPECT_EQ(v.evidence.group_stats.size(), 2u);
  EXPECT_DOUBLE_EQ(v.evidence.group_stats.at("area=A").rate, 0.75);
  EXPECT_EQ(v.evidence.sample_digest.rfind("fnv1a64:", 0), 0u);
  EXPECT_FALSE(v.threshold.satisfied_by(*v.value));
  EXPECT_TRUE(engine.violated("Parity/Fair"));
}

TEST(Engine, HysteresisIsConfigurable) {
  for (int h : {1, 2, 5}) {
    auto engine = make(h);
    std::uint64_t at = 0;
    for (int i = 0; i < 40 && at == 0; ++i) {
      const auto out = engine.ingest(unfair(i));
      if (!rule_records(out, "Parity/Fair").empty()) at = engine.counters().ingested;
    }
    EXPECT_EQ(at, 7u + static_cast<unsigned>(h)) << h;
  }
}

TEST(Engine, RecoveryIsLoggedAndReArmsTheRule) {
  auto engine = make();
  int records = 0;
  int recoveries = 0;
  std::int64_t ts = 0;
  for (int round = 0; round < 3; ++round) {
    for (int i = 0; i < 24; ++i) {
      records += rule_records(engine.ingest(unfair(ts++)), "Parity/Fair").size();
    }
    for (int i = 0; i < 24; ++i) {
      const auto out = engine.ingest(fair(ts++));
      records += rule_records(out, "Parity/Fair").size();
      for (const auto& l : out.log) {
        if (l.text.rfind("recovery rule=Parity/Fair", 0) == 0) {
          EXPECT_EQ(l.severity, Severity::kInfo);
          ++recoveries;
        }
      }
    }
    EXPECT_FALSE(engine.violated("Parity/Fair"));
  }
  EXPECT_EQ(records, 3);
  EXPECT_EQ(recoveries, 3);
}

TEST(Engine, TimeWindowsEvictByEventTimestamp) {
  auto engine = make();
  std::vector<std::size_t> sizes;
  for (int i = 0; i < 20; ++i) {
    for (const auto& r : engine.ingest(speed(i * 500, 5)).results) sizes.push_back(r.n);
  }
  ASSERT_EQ(sizes.size(), 20u);
  EXPECT_EQ(sizes[0], 1u);
  EXPECT_EQ(sizes[3], 4u);
  EXPECT_EQ(sizes.back(), 4u);  // items older than 2 s are gone
  const auto out = engine.ingest(speed(100000, 5));
  EXPECT_EQ(out.results.at(0).n, 1u);
}

TEST(Engine, RangeRateTriggersSafetyRecord) {
  auto engine = make(1);
  std::vector<ViolationRecord> records;
  for (int i = 0; i < 10; ++i) {
    for (auto& v : engine.ingest(speed(i * 100, i < 3 ? 5 : 14)).violations) records.push_back(v);
  }
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0].rule, "Fast/Safe");
  EXPECT_EQ(records[0].family, metrics::MetricFamily::kSafety);
  EXPECT_GT(*records[0].value, 0.5);
}

TEST(Engine, AccuracyJoinsFeedbackOnRefId) {
  auto engine = make(1);
  std::vector<double> values;
  for (int i = 0; i < 8; ++i) {
    Event p;
    p.ts = i;
    p.component = "Cam";
    p.prediction = std::string(i % 2 ? "porch" : "door");
    p.ref_id = "r" + std::to_string(i);
    engine.ingest(p);
  }
  for (int i = 0; i < 8; ++i) {
    Event f;
    f.ts = 10 + i;
    f.component = "Cam";
    f.kind = EventKind::kFeedback;
    f.label = std::string(i < 6 ? (i % 2 ? "porch" : "door") : "garage");
    f.ref_id = "r" + std::to_string(i);
    for (const auto& r : engine.ingest(f).results) {
      if (r.evaluator == "Acc") values.push_back(r.value);
    }
  }
  ASSERT_EQ(values.size(), 5u);
  EXPECT_DOUBLE_EQ(values.front(), 1.0);
  EXPECT_DOUBLE_EQ(values.back(), 0.5);
}

TEST(Engine, DegenerateBaselineBecomesOneEvaluatorErrorPerEpisode) {
  auto engine = make(3, "");
  std::vector<ViolationRecord> errors;
  for (int i = 0; i < 30; ++i) {
    for (auto& v : engine.ingest(fair(i)).violations) {
      if (v.kind == RecordKind::kEvaluatorError) errors.push_back(v);
    }
  }
  ASSERT_EQ(errors.size(), 1u);
  EXPECT_EQ(errors[0].techreq, "Dist");
  EXPECT_FALSE(errors[0].evidence.error.empty());
  EXPECT_FALSE(errors[0].value.has_value());
}

TEST(Engine, DriftAgainstBaseline) {
  auto engine = make(1);
  std::vector<ViolationRecord> records;
  for (int i = 0; i < 20; ++i) {
    const auto out = engine.ingest(routed(i, i % 2 ? "A" : "B", i % 4 < 2, i < 10 ? i / 10.0 : 5));
    for (auto& v : rule_records(out, "Dist/Stable")) records.push_back(v);
  }
  ASSERT_EQ(records.size(), 1u);
  ASSERT_TRUE(records[0].evidence.baseline.has_value());
  EXPECT_EQ(records[0].evidence.baseline->dataset, "Past");
  EXPECT_EQ(records[0].evidence.baseline->n, 50u);
}

TEST(Snapshot, FreshStateIsAllSatisfied) {
  const auto doc = make().snapshot();
  for (const auto& r : doc.at("rules")) EXPECT_EQ(r.at("status"), "satisfied");
}

TEST(Snapshot, MarksViolatedRulesAndRoundTrips) {
  auto engine = make();
  for (int i = 0; i < 20; ++i) engine.ingest(unfair(i));
  const auto doc = engine.snapshot();
  bool marked = false;
  for (const auto& r : doc.at("rules")) {
    marked |= r.at("id") == "Parity/Fair" && r.at("status") == "violated";
  }
  EXPECT_TRUE(marked);

  auto copy = make();
  copy.restore(doc);
  EXPECT_EQ(copy.snapshot().dump(), doc.dump());
  EXPECT_TRUE(copy.violated("Parity/Fair"));
  EXPECT_EQ(copy.counters(), engine.counters());
}

TEST(Snapshot, RestoredEngineContinuesIdentically) {
  std::mt19937_64 rng(99);
  std::vector<Event> stream;
  for (int i = 0; i < 3000; ++i) {
    const auto u = rng() % 100;
    if (u < 60) {
      const bool a = rng() % 2;
      const double p = (i / 500) % 2 ? (a ? 0.9 : 0.4) : 0.7;
      stream.push_back(routed(i * 10, a ? "A" : "B", (rng() % 1000) < p * 1000,
                              static_cast<double>(rng() % 1000) / 1000.0));
    } else if (u < 85) {
      stream.push_back(speed(i * 10, static_cast<double>(rng() % 14)));
    } else {
      Event c;
      c.ts = i * 10;
      c.component = "Cam";
      c.prediction = std::string("door");
      c.ref_id = "r" + std::to_string(i);
      c.signals["stored"] = rng() % 6 == 0;
      stream.push_back(c);
    }
  }
  auto whole = make();
  std::string expected;
  for (const auto& e : stream) {
    for (const auto& v : whole.ingest(e).violations) expected += to_json(v).dump() + "\n";
  }
  ASSERT_FALSE(expected.empty());

  for (std::size_t cut : {0u, 1u, 500u, 1777u, 2999u}) {
    auto first = make();
    std::string got;
    for (std::size_t i = 0; i < cut; ++i) {
      for (const auto& v : first.ingest(stream[i]).violations) got += to_json(v).dump() + "\n";
    }
    auto second = make();
    second.restore(nlohmann::ordered_json::parse(first.snapshot().dump()));
    for (std::size_t i = cut; i < stream.size(); ++i) {
      for (const auto& v : second.ingest(stream[i]).violations) got += to_json(v).dump() + "\n";
    }
    EXPECT_EQ(got, expected) << cut;
    EXPECT_EQ(second.snapshot().dump(), whole.snapshot().dump());
  }
}

TEST(Snapshot, RejectsForeignDocuments) {
  auto engine = make();
  auto doc = engine.snapshot();
  doc["monitor_id"] = "Other";
  EXPECT_THROW(engine.restore(doc), EngineError);
  EXPECT_THROW(engine.restore(Json::object()), EngineError);
}

// Random streams: edge-triggering, conservation, bounded memory, determinism.
class EngineProperty : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(EngineProperty, InvariantsHoldOnRandomStreams) {
  std::mt19937_64 rng(GetParam());
  auto engine = make(static_cast<int>(1 + rng() % 3));
  auto twin = make(engine.options().hysteresis);
  std::map<std::string, bool> open;  // rule -> inside an episode
  const std::size_t bound = 8 + 10 + 10 + 4 + engine.options().time_window_cap +
                            engine.options().pending_cap;
  std::size_t peak = 0;
  for (int i = 0; i < 20000; ++i) {
    Event e;
    const auto pick = rng() % 10;
    if (pick < 5) {
      const bool a = rng() % 2;
      const double p = a ? 0.5 + 0.4 * ((i / 700) % 2) : 0.7;
      e = routed(i * 50, a ? "A" : "B", (rng() % 1000) < p * 1000,
                 static_cast<double>(rng() % 100) / 100.0);
    } else if (pick < 8) {
      e = speed(i * 50, static_cast<double>(rng() % 16));
    } else if (pick < 9) {
      e.ts = i * 50;
      e.component = "Cam";
      e.prediction = std::string(rng() % 2 ? "a" : "b");
      e.ref_id = "r" + std::to_string(rng() % 64);
      e.signals["stored"] = rng() % 4 == 0;
    } else {
      e.ts = i * 50;
      e.component = rng() % 2 ? "Cam" : "Ghost";
      e.kind = EventKind::kFeedback;
      e.label = std::string(rng() % 2 ? "a" : "b");
      if (rng() % 5) e.ref_id = "r" + std::to_string(rng() % 64);
    }
    const auto out = engine.ingest(e);
    const auto same = twin.ingest(e);
    ASSERT_EQ(out.violations.size(), same.violations.size());
    for (std::size_t k = 0; k < out.violations.size(); ++k) {
      ASSERT_EQ(to_json(out.violations[k]).dump(), to_json(same.violations[k]).dump());
    }
    for (const auto& l : out.log) {
      if (l.text.rfind("recovery rule=", 0) == 0) {
        const auto rule = l.text.substr(14, l.text.find(' ', 14) - 14);
        ASSERT_TRUE(open[rule]) << rule;
        open[rule] = false;
      }
    }
    for (const auto& v : out.violations) {
      if (v.kind != RecordKind::kViolation) continue;
      ASSERT_FALSE(open[v.rule]) << "second record without recovery: " << v.rule;
      ASSERT_FALSE(v.threshold.satisfied_by(*v.value));
      open[v.rule] = true;
    }
    for (const auto& [rule, inside] : open) ASSERT_EQ(engine.violated(rule), inside);
    peak = std::max(peak, engine.buffered_items());
  }
  const auto& c = engine.counters();
  EXPECT_EQ(c.ingested, c.routed + c.dropped + c.malformed);
  EXPECT_LE(peak, bound);
  EXPECT_LE(engine.buffered_items(), 8u + 10 + 10 + 4 + 41 + 64);
}

INSTANTIATE_TEST_SUITE_P(Seeds, EngineProperty, ::testing::Values(1, 2, 3, 4));
