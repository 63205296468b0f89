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


#include <arpa/inet.h>
#include <gtest/gtest.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>
#include <regex>

#include "fixtures.hpp"
#include "hcmon/cli.hpp"
#include "hcmon/harness.hpp"

namespace fs = std::filesystem;
using hcmon::io::read_file;

namespace {

struct Result {
  int status;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int status = hcmon::cli::run_cli(args, out, err);
  return {status, out.str(), err.str()};
}

std::vector<std::string> drone_files() {
  std::vector<std::string> out;
  for (const char* n : {"requirements", "technical", "architecture", "design", "context"}) {
    out.push_back(fixture::path(std::string("models/drone/") + n + ".hcm"));
  }
  return out;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           fmt::format("hcmon-cli-{}-{}", ::getpid(),
                       ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string at(const std::string& name) const { return (dir_ / name).string(); }

  std::string plan() {
    auto args = std::vector<std::string>{"compile"};
    for (const auto& f : drone_files()) args.push_back(f);
    args.insert(args.end(), {"--out", at("drone.plan")});
    EXPECT_EQ(cli(args).status, 0);
    return at("drone.plan");
  }

  std::string simulate(const std::string& name, const std::string& mutate = "") {
    std::vector<std::string> args{"simulate", "--scenario",
                                  fixture::path("models/drone/scenario.hcm"), "--steps",
                                  "3000", "--out", at(name)};
    if (!mutate.empty()) args.insert(args.end(), {"--mutate", mutate});
    EXPECT_EQ(cli(args).status, 0);
    return at(name);
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(cli({}).status, 1);
  EXPECT_EQ(cli({"frobnicate"}).status, 1);
  EXPECT_EQ(cli({"run"}).status, 1);
  EXPECT_EQ(cli({"run", "--plan", "p", "--events", "e", "--listen", "h:1"}).status, 1);
  EXPECT_EQ(cli({"run", "--plan", plan(), "--listen", "nohost"}).status, 1);
  EXPECT_EQ(cli({"weave", "a.hcm"}).status, 1);
  EXPECT_EQ(cli({"--help"}).status, 0);
}

TEST_F(Cli, ValidateReportsDiagnosticsAndExitsTwo) {
  auto args = std::vector<std::string>{"validate"};
  for (const auto& f : drone_files()) args.push_back(f);
  args.push_back(fixture::path("models/drone/scenario.hcm"));
  EXPECT_EQ(cli(args).status, 0);

  const auto bad = cli({"validate", fixture::path("tests/data/malformed/missing_semicolon.hcm")});
  EXPECT_EQ(bad.status, 2);
  EXPECT_NE(bad.out.find("syntax-error"), std::string::npos);
  EXPECT_NE(bad.out.find("missing_semicolon.hcm:5:3"), std::string::npos);
  EXPECT_EQ(cli({"validate", at("absent.hcm")}).status, 2);
}

TEST_F(Cli, WeaveTrace) {
  auto args = std::vector<std::string>{"weave"};
  for (const auto& f : drone_files()) args.push_back(f);
  EXPECT_NE(cli(args).out.find("woven "), std::string::npos);
  args.insert(args.end(), {"--trace", "PrivacyOfImages"});
  const auto r = cli(args);
  EXPECT_EQ(r.status, 0);
  EXPECT_NE(r.out.find("requirement PrivacyOfImages: privacy of images"), std::string::npos);
  args.back() = "Nope";
  EXPECT_EQ(cli(args).status, 2);
}

TEST_F(Cli, WeaveErrorsExitTwo) {
  auto files = drone_files();
  const auto tech = read_file(files[1]);
  hcmon::io::write_file_atomic(at("tech.hcm"),
      std::regex_replace(tech, std::regex("satisfies: PrivacyOfImages;"), "satisfies: Privacyy;"));
  files[1] = at("tech.hcm");
  auto args = std::vector<std::string>{"weave"};
  args.insert(args.end(), files.begin(), files.end());
  const auto r = cli(args);
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.out.find("dangling-reference") + r.err.find("dangling-reference"),
            2 * std::string::npos);
}

TEST_F(Cli, CompileIsIdempotentAndAtomic) {
  const auto first = read_file(plan());
  const auto second = read_file(plan());
  EXPECT_EQ(first, second);
  EXPECT_TRUE(hcmon::plan::load_plan(first).ok());

  // A failed compile must not leave a partial file behind.
  auto args = std::vector<std::string>{"compile"};
  auto files = drone_files();
  files[4] = fixture::path("tests/data/malformed/bad_dataset_role.hcm");
  args.insert(args.end(), files.begin(), files.end());
  args.insert(args.end(), {"--out", at("broken.plan")});
  EXPECT_EQ(cli(args).status, 2);
  EXPECT_FALSE(fs::exists(at("broken.plan")));
  for (const auto& e : fs::directory_iterator(dir_)) {
    EXPECT_EQ(e.path().filename().string().find(".tmp"), std::string::npos) << e.path();
  }
}

TEST_F(Cli, RunExitCodes) {
  const auto p = plan();
  const auto clean = simulate("clean.jsonl");
  const auto r = cli({"run", "--plan", p, "--events", clean, "--log", at("log.txt")});
  EXPECT_EQ(r.status, 0) << r.err;
  const auto summary = nlohmann::json::parse(r.out);
  EXPECT_EQ(summary.at("violations"), 0);
  EXPECT_EQ(summary.at("events"), summary.at("routed"));

  const auto leaky = simulate("leak.jsonl", "leak(0.2)@500");
  const auto v = cli({"run", "--plan", p, "--events", leaky, "--violations", at("v.jsonl"),
                      "--audit", at("audit.log"), "--log", at("log.txt")});
  EXPECT_EQ(v.status, 3);
  EXPECT_NE(read_file(at("audit.log"))
                .find("obfuscate(image_stored) DestinationRecogniser applied"),
            std::string::npos);

  EXPECT_EQ(cli({"run", "--plan", at("missing.plan"), "--events", clean}).status, 2);
  EXPECT_EQ(cli({"run", "--plan", dir_.string(), "--events", clean}).status, 2);
  hcmon::io::write_file_atomic(at("bad.plan"), "monitor: id=X\n");
  EXPECT_EQ(cli({"run", "--plan", at("bad.plan"), "--events", clean}).status, 2);
  EXPECT_EQ(cli({"run", "--plan", p, "--events", at("absent.jsonl")}).status, 2);
}

TEST_F(Cli, RunOutputsAreReproducible) {
  const auto p = plan();
  const auto events = simulate("bias.jsonl", "bias(B, 0.4)@300");
  std::string previous;
  for (int i = 0; i < 2; ++i) {
    const auto r = cli({"run", "--plan", p, "--events", events, "--violations", at("v.jsonl"),
                        "--results", at("r.jsonl"), "--alerts", at("a.jsonl"),
                        "--log", at("log.txt")});
    const auto all = r.out + read_file(at("v.jsonl")) + read_file(at("r.jsonl")) +
                     read_file(at("a.jsonl")) + read_file(at("log.txt"));
    if (i == 1) {
      EXPECT_EQ(all, previous);
    }
    previous = all;
  }
}

TEST_F(Cli, SnapshotResumesARun) {
  const auto p = plan();
  const auto events = simulate("leak.jsonl", "leak(0.2)@1500");
  const auto text = read_file(events);
  std::size_t half = 0;
  for (int i = 0; i < 1000; ++i) half = text.find('\n', half) + 1;
  hcmon::io::write_file_atomic(at("first.jsonl"), text.substr(0, half));
  hcmon::io::write_file_atomic(at("second.jsonl"), text.substr(half));

  cli({"run", "--plan", p, "--events", events, "--violations", at("whole.jsonl"), "--log",
       at("l")});
  cli({"run", "--plan", p, "--events", at("first.jsonl"), "--violations", at("v1.jsonl"),
       "--snapshot-out", at("snap.json"), "--log", at("l")});
  cli({"run", "--plan", p, "--events", at("second.jsonl"), "--violations", at("v2.jsonl"),
       "--snapshot-in", at("snap.json"), "--log", at("l")});
  EXPECT_FALSE(read_file(at("whole.jsonl")).empty());
  EXPECT_EQ(read_file(at("v1.jsonl")) + read_file(at("v2.jsonl")), read_file(at("whole.jsonl")));
}

TEST_F(Cli, SimulateIsIdempotent) {
  simulate("a.jsonl", "drift(distance, 1.5)@1000");
  simulate("b.jsonl", "drift(distance, 1.5)@1000");
  EXPECT_EQ(read_file(at("a.jsonl")), read_file(at("b.jsonl")));
  EXPECT_EQ(read_file(at("a.jsonl.truth.jsonl")), read_file(at("b.jsonl.truth.jsonl")));
  EXPECT_EQ(cli({"simulate", "--scenario", fixture::path("models/drone/scenario.hcm"), "--mutate",
                 "bias(Z, 0.5)@10", "--out", at("c.jsonl")})
                .status,
            2);
  EXPECT_FALSE(fs::exists(at("c.jsonl")));
}

TEST_F(Cli, EvaluateAndReportAgree) {
  const auto p = plan();
  const auto r = cli({"evaluate", "--plan", p, "--scenario",
                      fixture::path("models/drone/scenario.hcm"), "--mutations",
                      fixture::path("models/drone/mutations/leak.hcm"), "--steps", "8000",
                      "--violations", at("v.jsonl"), "--events-out", at("e.jsonl"),
                      "--report-json", at("r.json"), "--log", at("l")});
  EXPECT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(r.out.rfind("scenario DroneDelivery seed 42 steps 8000", 0), 0u) << r.out;
  const auto doc = nlohmann::json::parse(read_file(at("r.json")));
  EXPECT_EQ(doc.at("score").at("recall"), 1.0);
  EXPECT_EQ(doc.at("score").at("precision"), 1.0);

  auto truth = hcmon::harness::GroundTruth{1767225600000, 100, {}};
  truth.intervals.push_back({"ImagesKept", "leak(0.2)", "privacy", 5000, 7999});
  hcmon::io::write_file_atomic(at("t.jsonl"), hcmon::harness::format_truth(truth));
  const auto rep = cli({"report", "--violations", at("v.jsonl"), "--truth", at("t.jsonl"),
                        "--report-json", at("r2.json")});
  EXPECT_EQ(rep.status, 0);
  EXPECT_EQ(nlohmann::json::parse(read_file(at("r2.json"))).at("score"), doc.at("score"));
  EXPECT_EQ(cli({"report", "--violations", at("v.jsonl"), "--truth", at("none")}).status, 2);
}

// The binary itself: stdin and socket ingestion.
TEST_F(Cli, BinaryReadsStandardInput) {
  const auto p = plan();
  const auto events = simulate("e.jsonl");
  const auto cmd = fmt::format("{} run --plan {} --events - --log {} < {} > {}", HCMON_BINARY, p,
                               at("log"), events, at("summary.json"));
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_EQ(nlohmann::json::parse(read_file(at("summary.json"))).at("events"), 2998);
}

TEST_F(Cli, BinaryListensOnTcp) {
  const auto p = plan();
  const auto events = read_file(simulate("e.jsonl", "leak(0.2)@100"));
  const auto cmd = fmt::format(
      "{} run --plan {} --listen 127.0.0.1:0 --max-connections 2 --violations {} "
      "> {} 2> {} &",
      HCMON_BINARY, p, at("v.jsonl"), at("summary.json"), at("log"));
  ASSERT_EQ(std::system(cmd.c_str()), 0);

  int port = 0;
  for (int i = 0; i < 200 && port == 0; ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(25));
    const auto log = fs::exists(at("log")) ? read_file(at("log")) : "";
    if (const auto k = log.find("listening on 127.0.0.1:"); k != std::string::npos) {
      port = std::stoi(log.substr(k + 23));
    }
  }
  ASSERT_GT(port, 0);

  const auto send = [&](const std::string& payload) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    ::inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
    ASSERT_EQ(::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr), 0);
    for (std::size_t off = 0; off < payload.size();) {
      const auto chunk = std::min<std::size_t>(4096, payload.size() - off);
      const auto n = ::write(fd, payload.data() + off, chunk);
      ASSERT_GT(n, 0);
      off += static_cast<std::size_t>(n);
    }
    ::close(fd);
  };
  const auto cut = events.find('\n', events.size() / 2) + 1;
  send(events.substr(0, cut));
  send(events.substr(cut));

  std::string summary;
  for (int i = 0; i < 400 && summary.empty(); ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(25));
    summary = read_file(at("summary.json"));
  }
  ASSERT_FALSE(summary.empty());
  const auto doc = nlohmann::json::parse(summary);
  EXPECT_EQ(doc.at("events"), 2998);
  EXPECT_EQ(doc.at("violations"), 1);
}
