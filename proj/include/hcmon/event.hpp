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
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "hcmon/plan.hpp"

namespace hcmon::engine {

using plan::EventKind;

/// Feature, prediction and label values: number, text or boolean.
using Scalar = std::variant<double, std::string, bool>;
/// Signal values: number or boolean.
using SignalValue = std::variant<double, bool>;

/// One observation from the monitored system, as carried on the wire.
struct Event {
  std::int64_t ts = 0;  // unix milliseconds
  std::string component;
  EventKind kind = EventKind::kPrediction;
  std::map<std::string, Scalar> features;
  std::optional<Scalar> prediction;
  std::optional<double> confidence;
  std::optional<Scalar> label;
  std::optional<std::string> ref_id;
  std::map<std::string, SignalValue> signals;

  bool operator==(const Event&) const = default;
};

struct EventParse {
  std::optional<Event> event;
  std::string error;  // set when `event` is empty
};

/// Parses one JSON object per line. Unknown keys, wrong types and missing
/// required fields (prediction on prediction events, label and ref_id on
/// feedback events) make the line malformed.
EventParse parse_event(std::string_view line);

/// Kind-specific requirements shared by the parser and direct ingestion;
/// returns an empty string when the event is well formed.
std::string check_event(const Event& event);

/// Compact JSON with a fixed key order and no trailing newline.
std::string serialize_event(const Event& event);

/// Category text used for predictions and group labels: `true`, `3`, `house`.
std::string category_text(const Scalar& value);

/// Number view of a scalar, if it has one (booleans count as 0/1).
std::optional<double> numeric(const Scalar& value);

}  // namespace hcmon::engine
