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

#include "hcmon/io.hpp"
#include "hcmon/weaver.hpp"

using namespace hcmon;
using namespace hcmon::weaver;

namespace {

SourceFile source(const std::string& path, const std::string& text) {
  auto r = dsml::parse_model(text);
  EXPECT_TRUE(r.ok()) << path;
  return {path, r.ok() ? *r.model : dsml::SourceModel{}};
}

std::vector<SourceFile> drone() {
  std::vector<SourceFile> out;
  for (const char* name : {"requirements", "technical", "architecture", "design", "context"}) {
    const std::string path = std::string(HCMON_SOURCE_DIR) + "/models/drone/" + name + ".hcm";
    out.push_back(source(path, io::read_file(path)));
  }
  return out;
}

const char* kHcr = R"(model hcr H;
requirement Safety { category: safety; severity: high;
  requirement Speed { category: safety; severity: critical; } })";
const char* kArch = R"(model arch A;
component Nav { kind: ml; implements: SpeedCap, SpeedFloor; }
component Cam { kind: traditional; }
connector Link { from: Cam; to: Nav; })";
const char* kDesign = R"(model design D;
design NavDesign { for: Nav; algorithm: "mpc"; })";
const char* kContext = R"(model context C;
context Air { for: Nav; deployment: "urban"; })";

std::vector<SourceFile> small(const std::string& tech, const std::string& arch = kArch) {
  return {source("h.hcm", kHcr), source("t.hcm", tech), source("a.hcm", arch),
          source("d.hcm", kDesign), source("c.hcm", kContext)};
}

bool has_code(const WovenModel& w, const std::string& code) {
  return std::any_of(w.diagnostics.begin(), w.diagnostics.end(),
                     [&](const Diagnostic& d) { return d.code == code; });
}

const char* kTwoCaps = R"(model tech T;
techreq SpeedCap { metric: range_rate(speed, 0, 10); scope: Nav; threshold: >= 0.9;
  window: 100 ev; satisfies: Speed; }
techreq SpeedFloor { metric: range_rate(speed, 0, 10); scope: Nav; threshold: %s;
  window: 100 ev; satisfies: Speed; })";

std::string two_caps(const std::string& threshold) {
  std::string s = kTwoCaps;
  s.replace(s.find("%s"), 2, threshold);
  return s;
}

}  // namespace

TEST(Weave, DroneModelsWeaveWithoutErrors) {
  const auto w = weave(drone());
  EXPECT_TRUE(w.compilable());
  EXPECT_TRUE(w.find("DroneHcr.PrivacyOfImages").has_value());
  const auto cam = w.resolve("GpuCamera", dsml::ModelKind::kArch);
  ASSERT_TRUE(cam.has_value());
  EXPECT_EQ(w.nodes[*cam].type, NodeType::kComponent);
  EXPECT_EQ(w.nodes[*cam].qualified_id, "DroneDelivery.GpuCamera");
}

TEST(Weave, TraceFollowsEveryLayer) {
  const auto w = weave(drone());
  const auto chain = trace(w, "PrivacyOfImages");
  EXPECT_EQ(chain.requirement, "PrivacyOfImages");
  EXPECT_EQ(chain.tech, std::vector<std::string>{"RecogniseDeliveryDestinations"});
  EXPECT_EQ(chain.components,
            (std::vector<std::string>{"DestinationRecogniser", "GpuCamera"}));
  EXPECT_EQ(chain.designs, std::vector<std::string>{"CnnDesign"});
  EXPECT_EQ(chain.contexts, std::vector<std::string>{"DroneContext"});

  const auto text = format_trace(w, chain);
  for (const char* needle : {"privacy of images", "destination recogniser", "GPU-based camera",
                             "convolutional neural network", "privacy constrained"}) {
    EXPECT_NE(text.find(needle), std::string::npos) << needle;
  }
  EXPECT_LT(text.find("destination recogniser"), text.find("GPU-based camera"));
}

TEST(Weave, TraceFollowsDirectSatisfactionOnly) {
  const auto w = weave(drone());
  EXPECT_TRUE(trace(w, "Privacy").tech.empty());
  EXPECT_TRUE(trace(w, "Honesty").tech.empty());
  EXPECT_THROW(trace(w, "NoSuchRequirement"), WeaveError);
}

TEST(Weave, ManyToManyLinksListEachComponentOnce) {
  const char* arch = R"(model arch A;
component Nav { kind: ml; implements: SpeedCap, SpeedFloor; }
component Cam { kind: traditional; implements: SpeedCap, SpeedFloor; }
component Idle { kind: traditional; })";
  const auto w = weave(small(two_caps(">= 0.5"), arch));
  ASSERT_TRUE(w.compilable());
  const auto chain = trace(w, "Speed");
  EXPECT_EQ(chain.tech, (std::vector<std::string>{"SpeedCap", "SpeedFloor"}));
  EXPECT_EQ(chain.components, (std::vector<std::string>{"Nav", "Cam"}));
  EXPECT_EQ(chain.designs, std::vector<std::string>{"NavDesign"});
  EXPECT_EQ(chain.contexts, std::vector<std::string>{"Air"});
}

TEST(Weave, TraceLinkNarrowsToOneTechReq) {
  const auto w = weave(small(two_caps(">= 0.5")));
  ASSERT_TRUE(w.compilable());
  EXPECT_EQ(trace(w, "Speed").tech, (std::vector<std::string>{"SpeedCap", "SpeedFloor"}));
  const auto link = trace_link(w, "Speed", "SpeedFloor");
  EXPECT_EQ(link.tech, std::vector<std::string>{"SpeedFloor"});
  EXPECT_EQ(link.components, std::vector<std::string>{"Nav"});
  EXPECT_EQ(link.designs, std::vector<std::string>{"NavDesign"});
}

TEST(Weave, EdgesAreTyped) {
  const auto w = weave(small(two_caps(">= 0.5")));
  const auto cap = *w.resolve("SpeedCap", dsml::ModelKind::kTech);
  const auto speed = *w.resolve("Speed", dsml::ModelKind::kHcr);
  EXPECT_EQ(w.targets(cap, EdgeType::kSatisfies), std::vector<std::size_t>{speed});
  const auto nav = *w.resolve("Nav", dsml::ModelKind::kArch);
  EXPECT_EQ(w.sources(cap, EdgeType::kImplements), std::vector<std::size_t>{nav});
  EXPECT_EQ(w.nodes[speed].parent, w.resolve("Safety", dsml::ModelKind::kHcr));
}

TEST(Weave, DanglingReferenceIsReported) {
  const auto w = weave(small(R"(model tech T;
techreq SpeedCap { metric: range_rate(speed, 0, 10); scope: Nav; threshold: >= 0.9;
  window: 100 ev; satisfies: Sped; })"));
  EXPECT_FALSE(w.compilable());
  EXPECT_TRUE(has_code(w, "dangling-reference"));
}

TEST(Weave, WrongKindReferenceIsReported) {
  const auto w = weave(small(R"(model tech T;
techreq SpeedCap { metric: range_rate(speed, 0, 10); scope: Nav; threshold: >= 0.9;
  window: 100 ev; satisfies: Nav; })"));
  EXPECT_FALSE(w.compilable());
  EXPECT_TRUE(has_code(w, "wrong-kind"));
}

TEST(Weave, ScopeMustBeAComponent) {
  const auto w = weave(small(R"(model tech T;
techreq SpeedCap { metric: range_rate(speed, 0, 10); scope: Link; threshold: >= 0.9;
  window: 100 ev; satisfies: Speed; })"));
  EXPECT_FALSE(w.compilable());
}

TEST(Weave, DisjointThresholdsConflict) {
  const auto w = weave(small(two_caps("<= 0.5")));
  EXPECT_FALSE(w.compilable());
  EXPECT_EQ(std::count_if(w.diagnostics.begin(), w.diagnostics.end(),
                          [](const Diagnostic& d) { return d.code == "conflict"; }),
            1);
}

TEST(Weave, TouchingThresholdsDoNotConflict) {
  EXPECT_TRUE(weave(small(two_caps("<= 0.9"))).compilable());
  EXPECT_FALSE(weave(small(two_caps("< 0.9"))).compilable());
}

TEST(Weave, MissingOrDuplicateKindThrows) {
  auto files = small(two_caps(">= 0.5"));
  files.pop_back();
  EXPECT_THROW(weave(files), WeaveError);
  files.push_back(files.front());
  EXPECT_THROW(weave(files), WeaveError);
}

TEST(Weave, IsDeterministic) {
  EXPECT_EQ(weave(drone()), weave(drone()));
}
