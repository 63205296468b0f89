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
#include <sstream>

#include "hcmon/engine.hpp"
#include "hcmon/harness.hpp"

namespace hcmon::harness {

using engine::Json;

std::string format_truth(const GroundTruth& t) {
  std::string out = Json{{"start_ts", t.start_ts},
                         {"interval_ms", t.interval_ms},
                         {"mutations", t.intervals.size()}}
                        .dump() +
                    '\n';
  for (const auto& i : t.intervals) {
    out += Json{{"mutation", i.mutation},
                {"injection", i.injection},
                {"kind", i.kind},
                {"onset", i.onset},
                {"end", i.end}}
               .dump() +
           '\n';
  }
  return out;
}

GroundTruth parse_truth(std::string_view text) {
  GroundTruth t;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t expected = 0;
  bool header = false;
  try {
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto j = Json::parse(line);
      if (!header) {
        t.start_ts = j.at("start_ts").get<std::int64_t>();
        t.interval_ms = j.at("interval_ms").get<std::int64_t>();
        expected = j.at("mutations").get<std::size_t>();
        header = true;
        continue;
      }
      t.intervals.push_back(TruthInterval{
          j.at("mutation").get<std::string>(), j.at("injection").get<std::string>(),
          j.at("kind").get<std::string>(), j.at("onset").get<std::uint64_t>(),
          j.at("end").get<std::uint64_t>()});
    }
  } catch (const Json::exception& err) {
    throw ConfigError(std::string("malformed ground truth: ") + err.what());
  }
  if (!header || t.intervals.size() != expected || t.interval_ms <= 0) {
    throw ConfigError("malformed ground truth: header missing or count mismatch");
  }
  return t;
}

std::vector<ScoredViolation> parse_violations(std::string_view text) {
  std::vector<ScoredViolation> out;
  std::istringstream in{std::string(text)};
  std::string line;
  try {
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto j = Json::parse(line);
      if (j.at("kind").get<std::string>() != "violation") continue;
      out.push_back({j.at("ts").get<std::int64_t>(), j.at("metric_kind").get<std::string>(),
                     j.at("rule").get<std::string>()});
    }
  } catch (const Json::exception& err) {
    throw ConfigError(std::string("malformed violation log: ") + err.what());
  }
  return out;
}

std::vector<ScoredViolation> scored(const std::vector<engine::ViolationRecord>& records) {
  std::vector<ScoredViolation> out;
  for (const auto& r : records) {
    if (r.kind != engine::RecordKind::kViolation) continue;
    out.push_back({r.ts, std::string(metrics::to_string(r.family)), r.rule});
  }
  return out;
}

DetectionScore score_detection(const std::vector<ScoredViolation>& violations,
                               const GroundTruth& truth, std::uint64_t grace) {
  const auto step_of = [&](std::int64_t ts) -> std::optional<std::uint64_t> {
    if (ts < truth.start_ts) return std::nullopt;
    return static_cast<std::uint64_t>((ts - truth.start_ts) / truth.interval_ms);
  };
  const auto hits = [&](const ScoredViolation& v, const TruthInterval& i) {
    const auto step = step_of(v.ts);
    return v.kind == i.kind && step && *step >= i.onset && *step <= i.end + grace;
  };

  DetectionScore score;
  score.violations = violations.size();
  for (const auto& v : violations) {
    if (std::any_of(truth.intervals.begin(), truth.intervals.end(),
                    [&](const TruthInterval& i) { return hits(v, i); })) {
      ++score.true_positives;
    }
  }
  if (score.violations > 0) {
    score.precision = static_cast<double>(score.true_positives) /
                      static_cast<double>(score.violations);
  }

  std::size_t detected = 0;
  for (const auto& i : truth.intervals) {
    MutationScore m;
    m.mutation = i.mutation;
    m.injection = i.injection;
    m.kind = i.kind;
    m.onset = i.onset;
    m.end = i.end;
    for (const auto& v : violations) {
      if (v.kind != i.kind) continue;
      ++m.violations;
      if (!hits(v, i)) continue;
      ++m.true_positives;
      const auto lag = *step_of(v.ts) - i.onset;
      m.latency = m.latency ? std::min(*m.latency, lag) : lag;
    }
    if (m.violations > 0) {
      m.precision = static_cast<double>(m.true_positives) / static_cast<double>(m.violations);
    }
    if (m.true_positives > 0) {
      m.recall = 1.0;
      ++detected;
      score.latency = score.latency ? std::max(*score.latency, *m.latency) : *m.latency;
    }
    score.mutations.push_back(std::move(m));
  }
  if (!truth.intervals.empty()) {
    score.recall = static_cast<double>(detected) / static_cast<double>(truth.intervals.size());
  }
  return score;
}

namespace {

template <class T>
Json or_null(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

std::string ratio(const std::optional<double>& v) {
  return v ? fmt::format("{:.3f}", *v) : std::string("n/a");
}

std::string steps(const std::optional<std::uint64_t>& v) {
  return v ? std::to_string(*v) : std::string("-");
}

}  // namespace

Json to_json(const DetectionScore& s) {
  Json mutations = Json::array();
  for (const auto& m : s.mutations) {
    mutations.push_back(Json{{"mutation", m.mutation},
                             {"injection", m.injection},
                             {"kind", m.kind},
                             {"onset", m.onset},
                             {"end", m.end},
                             {"violations", m.violations},
                             {"true_positives", m.true_positives},
                             {"precision", or_null(m.precision)},
                             {"recall", m.recall},
                             {"latency", or_null(m.latency)}});
  }
  return Json{{"violations", s.violations},
              {"true_positives", s.true_positives},
              {"precision", or_null(s.precision)},
              {"recall", or_null(s.recall)},
              {"latency", or_null(s.latency)},
              {"mutations", std::move(mutations)}};
}

std::string format_report(const DetectionScore& s) {
  constexpr auto kRow = "{:<30} {:<24} {:<16} {:>7} {:>7} {:>6} {:>4} {:>9} {:>6} {:>7}\n";
  std::string out = fmt::format(kRow, "mutation", "injection", "kind", "onset", "end", "viol",
                                "tp", "precision", "recall", "latency");
  for (const auto& m : s.mutations) {
    out += fmt::format(kRow, m.mutation, m.injection, m.kind, m.onset, m.end, m.violations,
                       m.true_positives, ratio(m.precision), ratio(m.recall), steps(m.latency));
  }
  out += fmt::format(kRow, "total", "", "", "", "", s.violations, s.true_positives,
                     ratio(s.precision), ratio(s.recall), steps(s.latency));
  return out;
}

}  // namespace hcmon::harness
