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


#include "hcmon/event.hpp"

#include <cmath>

#include <json.hpp>

#include "hcmon/dsml/syntax.hpp"

namespace hcmon::engine {
namespace {

using nlohmann::json;

bool is_number(const json& j) { return j.is_number() && std::isfinite(j.get<double>()); }

std::optional<Scalar> scalar_of(const json& j) {
  if (j.is_boolean()) return Scalar{j.get<bool>()};
  if (j.is_string()) return Scalar{j.get<std::string>()};
  if (is_number(j)) return Scalar{j.get<double>()};
  return std::nullopt;
}

json to_json(const Scalar& v) {
  return std::visit([](const auto& x) { return json(x); }, v);
}

json to_json(const SignalValue& v) {
  return std::visit([](const auto& x) { return json(x); }, v);
}

}  // namespace

std::string category_text(const Scalar& value) {
  if (const auto* b = std::get_if<bool>(&value)) return *b ? "true" : "false";
  if (const auto* s = std::get_if<std::string>(&value)) return *s;
  return dsml::syntax::format_number(std::get<double>(value));
}

std::optional<double> numeric(const Scalar& value) {
  if (const auto* b = std::get_if<bool>(&value)) return *b ? 1.0 : 0.0;
  if (const auto* d = std::get_if<double>(&value)) return *d;
  return std::nullopt;
}

EventParse parse_event(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error&) {
    return {std::nullopt, "invalid JSON"};
  }
  if (!j.is_object()) return {std::nullopt, "event is not an object"};

  Event e;
  bool has_ts = false;
  bool has_component = false;
  bool has_kind = false;
  for (const auto& [key, value] : j.items()) {
    if (value.is_null() && key != "ts" && key != "component" && key != "kind") continue;
    if (key == "ts") {
      if (!value.is_number_integer()) return {std::nullopt, "ts must be an integer"};
      e.ts = value.get<std::int64_t>();
      has_ts = true;
    } else if (key == "component") {
      if (!value.is_string() || value.get<std::string>().empty()) {
        return {std::nullopt, "component must be a non-empty string"};
      }
      e.component = value.get<std::string>();
      has_component = true;
    } else if (key == "kind") {
      const auto kind = value.is_string() ? plan::parse_event_kind(value.get<std::string>())
                                          : std::nullopt;
      if (!kind) return {std::nullopt, "kind must be prediction, feedback or signal"};
      e.kind = *kind;
      has_kind = true;
    } else if (key == "features") {
      if (!value.is_object()) return {std::nullopt, "features must be an object"};
      for (const auto& [name, v] : value.items()) {
        auto s = scalar_of(v);
        if (!s) return {std::nullopt, "feature " + name + " has an unsupported type"};
        e.features.emplace(name, std::move(*s));
      }
    } else if (key == "prediction" || key == "label") {
      auto s = scalar_of(value);
      if (!s) return {std::nullopt, key + " has an unsupported type"};
      (key == "prediction" ? e.prediction : e.label) = std::move(*s);
    } else if (key == "confidence") {
      if (!is_number(value)) return {std::nullopt, "confidence must be a number"};
      const double c = value.get<double>();
      if (c < 0.0 || c > 1.0) return {std::nullopt, "confidence outside [0, 1]"};
      e.confidence = c;
    } else if (key == "ref_id") {
      if (!value.is_string()) return {std::nullopt, "ref_id must be a string"};
      e.ref_id = value.get<std::string>();
    } else if (key == "signals") {
      if (!value.is_object()) return {std::nullopt, "signals must be an object"};
      for (const auto& [name, v] : value.items()) {
        if (v.is_boolean()) {
          e.signals.emplace(name, v.get<bool>());
        } else if (is_number(v)) {
          e.signals.emplace(name, v.get<double>());
        } else {
          return {std::nullopt, "signal " + name + " must be a number or boolean"};
        }
      }
    } else {
      return {std::nullopt, "unknown key " + key};
    }
  }
  if (!has_ts || !has_component || !has_kind) {
    return {std::nullopt, "ts, component and kind are required"};
  }
  if (auto error = check_event(e); !error.empty()) return {std::nullopt, std::move(error)};
  return {std::move(e), {}};
}

std::string check_event(const Event& e) {
  if (e.component.empty()) return "component must be a non-empty string";
  if (e.kind == EventKind::kPrediction && !e.prediction) {
    return "prediction event without prediction";
  }
  if (e.kind == EventKind::kFeedback && (!e.label || !e.ref_id)) {
    return "feedback event needs label and ref_id";
  }
  if (e.confidence && (*e.confidence < 0.0 || *e.confidence > 1.0)) {
    return "confidence outside [0, 1]";
  }
  return {};
}

std::string serialize_event(const Event& e) {
  nlohmann::ordered_json j;
  j["ts"] = e.ts;
  j["component"] = e.component;
  j["kind"] = std::string(plan::to_string(e.kind));
  if (!e.features.empty()) {
    nlohmann::ordered_json f = nlohmann::ordered_json::object();
    for (const auto& [k, v] : e.features) f[k] = to_json(v);
    j["features"] = std::move(f);
  }
  if (e.prediction) j["prediction"] = to_json(*e.prediction);
  if (e.confidence) j["confidence"] = *e.confidence;
  if (e.label) j["label"] = to_json(*e.label);
  if (e.ref_id) j["ref_id"] = *e.ref_id;
  if (!e.signals.empty()) {
    nlohmann::ordered_json s = nlohmann::ordered_json::object();
    for (const auto& [k, v] : e.signals) s[k] = to_json(v);
    j["signals"] = std::move(s);
  }
  return j.dump();
}

}  // namespace hcmon::engine
