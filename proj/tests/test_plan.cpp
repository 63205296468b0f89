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

#include <algorithm>
#include <random>

#include "fixtures.hpp"

using namespace hcmon;
using namespace hcmon::plan;

namespace {

const char* kHcr = R"(model hcr H;
requirement Fair { category: fairness; severity: medium;
  requirement Equal { category: fairness; severity: low; } })";
const char* kArch = R"(model arch A;
component Router { kind: ml; implements: Parity, Distance; })";
const char* kDesign = "model design D;";

std::vector<weaver::SourceFile> fixture_files(const std::string& tech, const std::string& context) {
  return {fixture::source("h.hcm", kHcr), fixture::source("t.hcm", tech),
          fixture::source("a.hcm", kArch), fixture::source("d.hcm", kDesign),
          fixture::source("/models/c.hcm", context)};
}

const char* kTech = R"(model tech T;
techreq Parity { metric: demographic_parity; scope: Router; threshold: <= 0.1; window: 50 ev;
  satisfies: Equal; adaptation Slow { action: throttle(Router, 0.5); cooldown: 2 m; } }
techreq Distance { metric: ks_drift(distance); scope: Router; threshold: <= 0.2; window: 30 s;
  satisfies: Equal, Fair; })";

const char* kContext = R"(model context C;
context Routing { for: Router; deployment: "city"; sensitive_attributes: area;
  dataset Past { role: training; baseline: "base/past.jsonl"; } })";

std::string code_of(const std::vector<Diagnostic>& ds) { return ds.empty() ? "" : ds[0].code; }

}  // namespace

TEST(Compile, DronePrivacyEvaluatorChainsToPrivacyOfImages) {
  const auto spec = fixture::compile("drone");
  const auto* e = spec.evaluator("RecogniseDeliveryDestinations");
  ASSERT_NE(e, nullptr);
  EXPECT_EQ(e->metric.name, "flag_rate");
  EXPECT_EQ(e->scope, "DestinationRecogniser");
  const auto* r = spec.rule("RecogniseDeliveryDestinations/PrivacyOfImages");
  ASSERT_NE(r, nullptr);
  EXPECT_EQ(r->hcr_chain, (std::vector<std::string>{"PrivacyOfImages", "Privacy"}));
  EXPECT_EQ(r->severity, dsml::Criticality::kCritical);
  EXPECT_EQ(spec.evaluators.size(), 10u);
}

TEST(Compile, OneRulePerSatisfiedRequirementWithMaxSeverity) {
  const auto r = compile(weaver::weave(fixture_files(kTech, kContext)));
  ASSERT_TRUE(r.ok()) << code_of(r.diagnostics);
  const auto& spec = *r.spec;
  ASSERT_EQ(spec.evaluators.size(), 2u);
  EXPECT_EQ(spec.evaluators[0].id, "Parity");
  EXPECT_EQ(spec.evaluators[0].sensitive_attributes, std::vector<std::string>{"area"});
  ASSERT_EQ(spec.rules.size(), 3u);
  EXPECT_EQ(spec.rules[1].id, "Distance/Equal");
  EXPECT_EQ(spec.rules[1].hcr_chain, (std::vector<std::string>{"Equal", "Fair"}));
  EXPECT_EQ(spec.rules[1].severity, dsml::Criticality::kMedium);
  EXPECT_EQ(spec.rules[2].hcr_chain, std::vector<std::string>{"Fair"});

  ASSERT_EQ(spec.adaptation_rules.size(), 1u);
  EXPECT_EQ(spec.adaptation_rules[0].on, "Parity/Equal");
  EXPECT_EQ(spec.adaptation_rules[0].cooldown_seconds, 120u);

  const auto& drift = spec.evaluators[1];
  ASSERT_TRUE(drift.baseline.has_value());
  EXPECT_EQ(drift.baseline->dataset, "Past");
  EXPECT_EQ(drift.baseline->path, "/models/base/past.jsonl");
  EXPECT_EQ(drift.window, (dsml::Window{dsml::WindowMode::kTime, 30}));
  ASSERT_EQ(spec.probes.size(), 1u);
  EXPECT_EQ(spec.probes[0].fields,
            (std::vector<std::string>{"features.area", "features.distance", "prediction"}));
}

TEST(Compile, TraceIndexMatchesWeaverTraces) {
  for (const char* dir : {"drone", "smarthealth"}) {
    const auto woven = weaver::weave(fixture::models(dir));
    const auto spec = *compile(woven).spec;
    ASSERT_EQ(spec.trace_index.size(), spec.rules.size());
    for (const auto& rule : spec.rules) {
      EXPECT_EQ(spec.trace_index.at(rule.id),
                weaver::trace_link(woven, rule.hcr_chain.front(), rule.evaluator));
    }
  }
}

TEST(Compile, FairnessNeedsSensitiveAttributes) {
  const auto r = compile(weaver::weave(fixture_files(kTech, R"(model context C;
context Routing { for: Router; dataset Past { role: training; baseline: "p"; } })")));
  EXPECT_FALSE(r.ok());
  EXPECT_EQ(code_of(r.diagnostics), "missing-sensitive-attributes");
}

TEST(Compile, DriftNeedsBaseline) {
  const auto r = compile(weaver::weave(fixture_files(kTech, R"(model context C;
context Routing { for: Router; sensitive_attributes: area; })")));
  EXPECT_FALSE(r.ok());
  EXPECT_EQ(code_of(r.diagnostics), "missing-baseline");
}

TEST(Compile, NoTechReqsGivesEmptySpec) {
  auto files = fixture_files("model tech T;", "model context C;");
  files[2] = fixture::source("a.hcm", "model arch A; component Router { kind: ml; }");
  const auto r = compile(weaver::weave(files));
  ASSERT_TRUE(r.ok());
  EXPECT_TRUE(r.spec->evaluators.empty());
  EXPECT_TRUE(r.spec->rules.empty());
  const auto text = emit_plan(*r.spec);
  EXPECT_NE(text.find("\nevaluators:\n"), std::string::npos);
  EXPECT_EQ(*load_plan(text).spec, *r.spec);
}

TEST(Compile, WovenErrorsAreCarriedThrough) {
  const auto r = compile(weaver::weave(fixture_files(R"(model tech T;
techreq Parity { metric: accuracy; scope: Nowhere; threshold: >= 0.5; window: 5 ev;
  satisfies: Equal; })", kContext)));
  EXPECT_FALSE(r.ok());
  EXPECT_TRUE(has_errors(r.diagnostics));
}

TEST(PlanText, RoundTripsAndIsAFixedPoint) {
  for (const char* dir : {"drone", "smarthealth"}) {
    const auto spec = fixture::compile(dir);
    const auto text = emit_plan(spec);
    EXPECT_EQ(emit_plan(fixture::compile(dir)), text);
    const auto loaded = load_plan(text);
    ASSERT_TRUE(loaded.ok()) << code_of(loaded.diagnostics);
    EXPECT_EQ(*loaded.spec, spec);
    EXPECT_EQ(emit_plan(*loaded.spec), text);
  }
}

TEST(PlanText, ValueEscaping) {
  EXPECT_EQ(encode_value("a b,c%d\n"), "a%20b%2Cc%25d%0A");
  EXPECT_EQ(decode_value("a%20b%2Cc%25d%0A"), "a b,c%d\n");
  EXPECT_FALSE(decode_value("bad%2").has_value());
  EXPECT_FALSE(decode_value("bad%zz").has_value());
  std::mt19937_64 rng(5);
  for (int i = 0; i < 500; ++i) {
    std::string raw(rng() % 12, '\0');
    for (auto& ch : raw) ch = static_cast<char>(rng() % 256);
    const auto enc = encode_value(raw);
    EXPECT_EQ(enc.find_first_of(" ,\n"), std::string::npos);
    EXPECT_EQ(decode_value(enc), raw);
  }
}

TEST(PlanText, TruncationIsAlwaysDetected) {
  const auto text = emit_plan(fixture::compile("drone"));
  for (std::size_t cut = 0; cut + 1 < text.size(); cut += 7) {
    const auto r = load_plan(text.substr(0, cut));
    EXPECT_FALSE(r.ok()) << cut;
    EXPECT_FALSE(r.diagnostics.empty());
  }
  EXPECT_EQ(code_of(load_plan(text.substr(0, text.size() - 1)).diagnostics), "truncated-plan");
}

TEST(PlanText, DroppingAnyLineIsDetected) {
  const auto text = emit_plan(fixture::compile("drone"));
  std::vector<std::string> lines;
  for (std::size_t a = 0, b; a < text.size(); a = b + 1) {
    b = text.find('\n', a);
    lines.push_back(text.substr(a, b - a + 1));
  }
  for (std::size_t skip = 0; skip < lines.size(); ++skip) {
    std::string damaged;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (i != skip) damaged += lines[i];
    }
    EXPECT_FALSE(load_plan(damaged).ok()) << skip;
  }
}

TEST(PlanText, UncoveredFieldIsRejected) {
  auto text = emit_plan(fixture::compile("drone"));
  const std::string field = "signals.altitude,";
  text.erase(text.find(field), field.size());
  const auto r = load_plan(text);
  EXPECT_FALSE(r.ok());
  EXPECT_EQ(code_of(r.diagnostics), "uncovered-field");
  EXPECT_GT(r.diagnostics[0].location.line, 0u);
}

TEST(PlanText, SchemaAndSyntaxErrorsCarryLocations) {
  auto text = emit_plan(fixture::compile("drone"));
  auto bad_metric = text;
  bad_metric.replace(bad_metric.find("metric=flag_rate"), 16, "metric=flag_rat");
  auto r = load_plan(bad_metric);
  EXPECT_EQ(code_of(r.diagnostics), "plan-schema");
  EXPECT_EQ(r.diagnostics[0].location.line, 7u);

  auto no_equals = text;
  no_equals.replace(no_equals.find("min_samples=100"), 15, "min_samples 100");
  r = load_plan(no_equals);
  EXPECT_EQ(code_of(r.diagnostics), "plan-syntax");
}
