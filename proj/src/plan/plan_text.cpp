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


#include <algorithm>
#include <charconv>
#include <set>

#include <fmt/format.h>

#include "hcmon/dsml/syntax.hpp"
#include "hcmon/plan.hpp"

namespace hcmon::plan {

using dsml::syntax::format_number;

std::string encode_value(std::string_view raw) {
  std::string out;
  for (unsigned char c : raw) {
    if (c == ' ' || c == '%' || c == ',' || c < 0x20 || c == 0x7f) {
      out += fmt::format("%{:02X}", c);
    } else {
      out += static_cast<char>(c);
    }
  }
  return out;
}

std::optional<std::string> decode_value(std::string_view encoded) {
  std::string out;
  for (std::size_t i = 0; i < encoded.size(); ++i) {
    if (encoded[i] != '%') {
      out += encoded[i];
      continue;
    }
    if (i + 2 >= encoded.size()) return std::nullopt;
    unsigned value = 0;
    const auto* first = encoded.data() + i + 1;
    const auto [end, ec] = std::from_chars(first, first + 2, value, 16);
    if (ec != std::errc{} || end != first + 2) return std::nullopt;
    out += static_cast<char>(value);
    i += 2;
  }
  return out;
}

namespace {

// --- emit --------------------------------------------------------------------

std::string list(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += ',';
    out += encode_value(items[i]);
  }
  return out;
}

std::string threshold_text(const dsml::Threshold& t) {
  return fmt::format("{}{}", dsml::to_string(t.comparator), format_number(t.bound));
}

std::vector<std::string> arg_texts(const dsml::MetricRef& m) {
  std::vector<std::string> out;
  for (const auto& a : m.args) {
    if (const auto* s = std::get_if<std::string>(&a)) {
      out.push_back(*s);
    } else {
      out.push_back(format_number(std::get<double>(a)));
    }
  }
  return out;
}

class Record {
 public:
  Record& add(std::string_view key, std::string_view encoded) {
    if (!text_.empty()) text_ += ' ';
    text_ += fmt::format("{}={}", key, encoded);
    return *this;
  }
  Record& text(std::string_view key, std::string_view raw) { return add(key, encode_value(raw)); }
  Record& text_if(std::string_view key, std::string_view raw) {
    return raw.empty() ? *this : text(key, raw);
  }
  const std::string& str() const { return text_; }

 private:
  std::string text_;
};

// --- load --------------------------------------------------------------------

struct Field {
  std::string value;  // decoded
  std::string raw;    // still encoded, for lists
  Location location;
};

class SchemaError : public std::runtime_error {
 public:
  SchemaError(std::string code, const std::string& message, Location at)
      : std::runtime_error(message), code(std::move(code)), location(at) {}
  std::string code;
  Location location;
};

class Fields {
 public:
  Fields(std::map<std::string, Field> fields, Location line)
      : fields_(std::move(fields)), line_(line) {}

  std::string required(const std::string& key) {
    const auto it = fields_.find(key);
    if (it == fields_.end()) {
      throw SchemaError("plan-schema", fmt::format("missing key '{}'", key), line_);
    }
    used_.insert(key);
    return it->second.value;
  }

  std::optional<std::string> optional(const std::string& key) {
    if (!fields_.count(key)) return std::nullopt;
    return required(key);
  }

  std::vector<std::string> list(const std::string& key, bool required_key = true) {
    const auto it = fields_.find(key);
    if (it == fields_.end()) {
      if (!required_key) return {};
      throw SchemaError("plan-schema", fmt::format("missing key '{}'", key), line_);
    }
    used_.insert(key);
    std::vector<std::string> out;
    if (it->second.raw.empty()) return out;
    std::size_t start = 0;
    while (true) {
      const auto comma = it->second.raw.find(',', start);
      const auto piece = std::string_view(it->second.raw).substr(
          start, comma == std::string::npos ? std::string::npos : comma - start);
      auto decoded = decode_value(piece);
      if (!decoded || decoded->empty()) {
        throw SchemaError("plan-schema", fmt::format("malformed list in '{}'", key),
                          it->second.location);
      }
      out.push_back(std::move(*decoded));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    return out;
  }

  std::uint64_t count(const std::string& key) {
    const auto text = required(key);
    std::uint64_t v = 0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || end != text.data() + text.size()) {
      throw SchemaError("plan-schema", fmt::format("'{}' must be a non-negative integer", key),
                        at(key));
    }
    return v;
  }

  double number(const std::string& key) {
    const auto text = required(key);
    return parse_number(text, at(key), key);
  }

  Location at(const std::string& key) const {
    const auto it = fields_.find(key);
    return it == fields_.end() ? line_ : it->second.location;
  }

  void finish() const {
    for (const auto& [key, f] : fields_) {
      if (!used_.count(key)) {
        throw SchemaError("plan-schema", fmt::format("unknown key '{}'", key), f.location);
      }
    }
  }

  static double parse_number(std::string_view text, Location at, std::string_view what) {
    double v = 0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || end != text.data() + text.size() || text.empty()) {
      throw SchemaError("plan-schema", fmt::format("'{}' is not a number", what), at);
    }
    return v;
  }

 private:
  std::map<std::string, Field> fields_;
  std::set<std::string> used_;
  Location line_;
};

Fields parse_record(std::string_view text, int line, int column) {
  std::map<std::string, Field> fields;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto space = text.find(' ', pos);
    if (space == std::string_view::npos) space = text.size();
    const auto token = text.substr(pos, space - pos);
    const Location at{line, column + static_cast<int>(pos)};
    const auto eq = token.find('=');
    if (token.empty() || eq == std::string_view::npos || eq == 0) {
      throw SchemaError("plan-syntax", "expected key=value", at);
    }
    const std::string key(token.substr(0, eq));
    const auto raw = token.substr(eq + 1);
    auto decoded = decode_value(raw);
    if (!decoded) throw SchemaError("plan-syntax", fmt::format("bad escape in '{}'", key), at);
    if (!fields.emplace(key, Field{*decoded, std::string(raw), at}).second) {
      throw SchemaError("plan-schema", fmt::format("duplicate key '{}'", key), at);
    }
    pos = space + 1;
  }
  return Fields(std::move(fields), Location{line, column});
}

dsml::Threshold parse_threshold(const std::string& text, Location at) {
  std::size_t n = 0;
  while (n < text.size() && std::string_view("<>=!").find(text[n]) != std::string_view::npos) ++n;
  const auto cmp = dsml::parse_comparator(std::string_view(text).substr(0, n));
  if (!cmp) throw SchemaError("plan-schema", fmt::format("bad threshold '{}'", text), at);
  return {*cmp, Fields::parse_number(std::string_view(text).substr(n), at, "threshold")};
}

dsml::Window parse_window(const std::string& text, Location at) {
  const auto colon = text.find(':');
  dsml::Window w;
  const auto mode = std::string_view(text).substr(0, colon);
  if (colon == std::string::npos || (mode != "count" && mode != "time")) {
    throw SchemaError("plan-schema", fmt::format("bad window '{}'", text), at);
  }
  w.mode = mode == "count" ? dsml::WindowMode::kCount : dsml::WindowMode::kTime;
  const auto size = std::string_view(text).substr(colon + 1);
  const auto [end, ec] = std::from_chars(size.data(), size.data() + size.size(), w.size);
  if (ec != std::errc{} || end != size.data() + size.size() || w.size == 0) {
    throw SchemaError("plan-schema", fmt::format("bad window '{}'", text), at);
  }
  return w;
}

class Loader {
 public:
  MonitorSpec load(std::string_view text) {
    if (text.empty() || text.back() != '\n') {
      throw SchemaError("truncated-plan", "plan does not end with a newline",
                        Location{line_count(text), 1});
    }
    split(text);
    std::size_t i = 0;
    MonitorSpec spec;
    std::uint64_t counts[4] = {};

    expect_header(i, "monitor");
    {
      auto f = parse_record(lines_[i].rest, lines_[i].number, lines_[i].rest_column);
      spec.monitor_id = f.required("id");
      counts[0] = f.count("probes");
      counts[1] = f.count("evaluators");
      counts[2] = f.count("rules");
      counts[3] = f.count("adaptations");
      f.finish();
      ++i;
    }
    expect_header(i, "probes");
    for (++i; record_at(i); ++i) spec.probes.push_back(probe(record(i)));
    expect_header(i, "evaluators");
    for (++i; record_at(i); ++i) spec.evaluators.push_back(evaluator(record(i), lines_[i]));
    expect_header(i, "rules");
    for (++i; record_at(i); ++i) rule(spec, record(i), lines_[i]);
    expect_header(i, "adaptations");
    for (++i; record_at(i); ++i) spec.adaptation_rules.push_back(adaptation(record(i)));
    if (i < lines_.size()) {
      throw SchemaError("plan-schema", "unexpected content after adaptations",
                        Location{lines_[i].number, 1});
    }

    const std::size_t actual[4] = {spec.probes.size(), spec.evaluators.size(), spec.rules.size(),
                                   spec.adaptation_rules.size()};
    static constexpr std::string_view kNames[4] = {"probes", "evaluators", "rules",
                                                   "adaptations"};
    for (int k = 0; k < 4; ++k) {
      if (counts[k] != actual[k]) {
        throw SchemaError("truncated-plan",
                          fmt::format("monitor declares {} {} but {} found", counts[k], kNames[k],
                                      actual[k]),
                          Location{lines_.front().number, 1});
      }
    }
    check_references(spec);
    return spec;
  }

 private:
  struct Line {
    int number;
    bool indented;
    std::string_view head;  // section name for headers
    std::string_view rest;  // record text
    int rest_column;
  };

  static int line_count(std::string_view text) {
    return 1 + static_cast<int>(std::count(text.begin(), text.end(), '\n'));
  }

  void split(std::string_view text) {
    int number = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
      const auto nl = text.find('\n', pos);
      const auto line = text.substr(pos, nl - pos);
      pos = nl + 1;
      ++number;
      if (line.empty() || line.front() == '#') continue;
      if (line.substr(0, 2) == "  ") {
        if (line.size() == 2 || line[2] == ' ') {
          throw SchemaError("plan-syntax", "records are indented by exactly two spaces",
                            Location{number, 1});
        }
        lines_.push_back({number, true, {}, line.substr(2), 3});
        continue;
      }
      const auto colon = line.find(':');
      if (colon == std::string_view::npos) {
        throw SchemaError("plan-syntax", "expected a section header", Location{number, 1});
      }
      auto rest = line.substr(colon + 1);
      int column = static_cast<int>(colon) + 2;
      if (!rest.empty()) {
        if (rest.front() != ' ') {
          throw SchemaError("plan-syntax", "expected a space after the section name",
                            Location{number, column});
        }
        rest.remove_prefix(1);
        ++column;
      }
      lines_.push_back({number, false, line.substr(0, colon), rest, column});
    }
  }

  void expect_header(std::size_t i, std::string_view name) {
    if (i >= lines_.size()) {
      throw SchemaError("truncated-plan", fmt::format("missing section '{}:'", name),
                        Location{lines_.empty() ? 1 : lines_.back().number + 1, 1});
    }
    const auto& l = lines_[i];
    if (l.indented || l.head != name) {
      throw SchemaError("plan-schema", fmt::format("expected section '{}:'", name),
                        Location{l.number, 1});
    }
    if (name == "monitor" ? l.rest.empty() : !l.rest.empty()) {
      throw SchemaError("plan-schema",
                        name == "monitor" ? "monitor header needs its fields"
                                          : fmt::format("section '{}:' takes no fields", name),
                        Location{l.number, l.rest_column});
    }
  }

  bool record_at(std::size_t i) const { return i < lines_.size() && lines_[i].indented; }
  Fields record(std::size_t i) const {
    return parse_record(lines_[i].rest, lines_[i].number, lines_[i].rest_column);
  }

  static Probe probe(Fields f) {
    Probe p;
    p.component = f.required("component");
    for (const auto& k : f.list("kinds")) {
      const auto kind = parse_event_kind(k);
      if (!kind) {
        throw SchemaError("plan-schema", fmt::format("unknown event kind '{}'", k), f.at("kinds"));
      }
      p.kinds.push_back(*kind);
    }
    p.fields = f.list("fields");
    f.finish();
    return p;
  }

  static Evaluator evaluator(Fields f, const Line& line) {
    Evaluator e;
    e.id = f.required("id");
    e.metric.name = f.required("metric");
    const auto* entry = metrics::find_metric(e.metric.name);
    if (entry == nullptr) {
      throw SchemaError("plan-schema", fmt::format("unknown metric '{}'", e.metric.name),
                        f.at("metric"));
    }
    const auto args = f.list("args");
    if (args.size() != entry->args.size()) {
      throw SchemaError("plan-schema",
                        fmt::format("metric '{}' takes {} arguments", e.metric.name,
                                    entry->args.size()),
                        f.at("args"));
    }
    for (std::size_t k = 0; k < args.size(); ++k) {
      if (entry->args[k] == metrics::ArgType::kField) {
        e.metric.args.emplace_back(args[k]);
      } else {
        e.metric.args.emplace_back(Fields::parse_number(args[k], f.at("args"), "args"));
      }
    }
    e.scope = f.required("scope");
    e.window = parse_window(f.required("window"), f.at("window"));
    e.min_samples = f.count("min_samples");
    if (e.min_samples == 0) {
      throw SchemaError("plan-schema", "min_samples must be at least 1", f.at("min_samples"));
    }
    e.sensitive_attributes = f.list("sensitive");
    const auto b_context = f.optional("baseline.context");
    const auto b_dataset = f.optional("baseline.dataset");
    const auto b_path = f.optional("baseline.path");
    if (b_context || b_dataset || b_path) {
      if (!b_context || !b_dataset || !b_path) {
        throw SchemaError("plan-schema", "baseline needs context, dataset and path",
                          Location{line.number, line.rest_column});
      }
      e.baseline = Baseline{*b_context, *b_dataset, *b_path};
    }
    e.context = f.optional("context").value_or("");
    e.deployment = f.optional("deployment").value_or("");
    f.finish();
    if (metrics::is_fairness(entry->kind) && e.sensitive_attributes.empty()) {
      throw SchemaError("plan-schema", "fairness evaluator without sensitive attributes",
                        f.at("sensitive"));
    }
    if (metrics::requires_baseline(entry->kind) && !e.baseline) {
      throw SchemaError("plan-schema", "drift evaluator without baseline",
                        Location{line.number, line.rest_column});
    }
    return e;
  }

  static void rule(MonitorSpec& spec, Fields f, const Line& line) {
    ViolationRule r;
    r.id = f.required("id");
    r.evaluator = f.required("evaluator");
    r.threshold = parse_threshold(f.required("threshold"), f.at("threshold"));
    r.hcr_chain = f.list("hcr_chain");
    if (r.hcr_chain.empty()) {
      throw SchemaError("plan-schema", "hcr_chain must not be empty", f.at("hcr_chain"));
    }
    const auto severity = dsml::parse_criticality(f.required("severity"));
    if (!severity) throw SchemaError("plan-schema", "unknown severity", f.at("severity"));
    r.severity = *severity;
    weaver::TraceChain chain;
    chain.requirement = f.required("trace.requirement");
    chain.tech = f.list("trace.tech");
    chain.components = f.list("trace.components");
    chain.designs = f.list("trace.designs");
    chain.contexts = f.list("trace.contexts");
    f.finish();
    if (spec.evaluator(r.evaluator) == nullptr) {
      throw SchemaError("plan-schema", fmt::format("rule '{}' names unknown evaluator '{}'",
                                                   r.id, r.evaluator),
                        f.at("evaluator"));
    }
    if (spec.rule(r.id) != nullptr) {
      throw SchemaError("plan-schema", fmt::format("duplicate rule '{}'", r.id),
                        Location{line.number, line.rest_column});
    }
    spec.trace_index[r.id] = std::move(chain);
    spec.rules.push_back(std::move(r));
  }

  static AdaptationRule adaptation(Fields f) {
    AdaptationRule a;
    a.id = f.required("id");
    a.on = f.required("on");
    const auto kind = dsml::parse_action_kind(f.required("action"));
    if (!kind) throw SchemaError("plan-schema", "unknown action", f.at("action"));
    a.action.kind = *kind;
    const bool needs_target = *kind != dsml::ActionKind::kNotify;
    if (needs_target) a.action.target = f.required("target");
    if (*kind == dsml::ActionKind::kSwitchThreshold) a.action.parameter = f.required("parameter");
    if (*kind == dsml::ActionKind::kSwitchThreshold || *kind == dsml::ActionKind::kThrottle) {
      a.action.value = f.number("value");
    }
    a.cooldown_seconds = f.count("cooldown");
    f.finish();
    return a;
  }

  void check_references(const MonitorSpec& spec) const {
    const Location first{lines_.front().number, 1};
    std::set<std::string> ids;
    for (const auto& e : spec.evaluators) {
      if (!ids.insert(e.id).second) {
        throw SchemaError("plan-schema", fmt::format("duplicate evaluator '{}'", e.id), first);
      }
      const Probe* probe = nullptr;
      for (const auto& p : spec.probes) {
        if (p.component == e.scope) probe = &p;
      }
      const auto in = inputs_of(e);
      for (const auto& field : in.fields) {
        if (probe == nullptr ||
            std::find(probe->fields.begin(), probe->fields.end(), field) == probe->fields.end()) {
          throw SchemaError("uncovered-field",
                            fmt::format("uncovered field {} of evaluator '{}' on '{}'", field,
                                        e.id, e.scope),
                            first);
        }
      }
      for (auto kind : in.kinds) {
        if (std::find(probe->kinds.begin(), probe->kinds.end(), kind) == probe->kinds.end()) {
          throw SchemaError("uncovered-field",
                            fmt::format("probe on '{}' does not route {} events for '{}'",
                                        e.scope, to_string(kind), e.id),
                            first);
        }
      }
    }
    for (const auto& a : spec.adaptation_rules) {
      if (spec.rule(a.on) == nullptr) {
        throw SchemaError("plan-schema",
                          fmt::format("adaptation '{}' is on unknown rule '{}'", a.id, a.on),
                          first);
      }
    }
  }

  std::vector<Line> lines_;
};

}  // namespace

std::string emit_plan(const MonitorSpec& spec) {
  std::string out;
  out += fmt::format("monitor: {}\n",
                     Record()
                         .text("id", spec.monitor_id)
                         .add("probes", std::to_string(spec.probes.size()))
                         .add("evaluators", std::to_string(spec.evaluators.size()))
                         .add("rules", std::to_string(spec.rules.size()))
                         .add("adaptations", std::to_string(spec.adaptation_rules.size()))
                         .str());

  out += "probes:\n";
  for (const auto& p : spec.probes) {
    std::vector<std::string> kinds;
    for (auto k : p.kinds) kinds.emplace_back(to_string(k));
    out += fmt::format("  {}\n", Record()
                                     .text("component", p.component)
                                     .add("kinds", list(kinds))
                                     .add("fields", list(p.fields))
                                     .str());
  }

  out += "evaluators:\n";
  for (const auto& e : spec.evaluators) {
    Record r;
    r.text("id", e.id)
        .text("metric", e.metric.name)
        .add("args", list(arg_texts(e.metric)))
        .text("scope", e.scope)
        .add("window", dsml::to_string(e.window))
        .add("min_samples", std::to_string(e.min_samples))
        .add("sensitive", list(e.sensitive_attributes));
    if (e.baseline) {
      r.text("baseline.context", e.baseline->context)
          .text("baseline.dataset", e.baseline->dataset)
          .text("baseline.path", e.baseline->path);
    }
    r.text_if("context", e.context).text_if("deployment", e.deployment);
    out += fmt::format("  {}\n", r.str());
  }

  out += "rules:\n";
  for (const auto& rule : spec.rules) {
    Record r;
    r.text("id", rule.id)
        .text("evaluator", rule.evaluator)
        .add("threshold", threshold_text(rule.threshold))
        .add("hcr_chain", list(rule.hcr_chain))
        .add("severity", dsml::to_string(rule.severity));
    const auto it = spec.trace_index.find(rule.id);
    const weaver::TraceChain chain =
        it == spec.trace_index.end() ? weaver::TraceChain{rule.hcr_chain.front(), {}, {}, {}, {}}
                                     : it->second;
    r.text("trace.requirement", chain.requirement)
        .add("trace.tech", list(chain.tech))
        .add("trace.components", list(chain.components))
        .add("trace.designs", list(chain.designs))
        .add("trace.contexts", list(chain.contexts));
    out += fmt::format("  {}\n", r.str());
  }

  out += "adaptations:\n";
  for (const auto& a : spec.adaptation_rules) {
    Record r;
    r.text("id", a.id).text("on", a.on).add("action", dsml::to_string(a.action.kind));
    if (a.action.kind != dsml::ActionKind::kNotify) r.text("target", a.action.target);
    if (a.action.kind == dsml::ActionKind::kSwitchThreshold) {
      r.text("parameter", a.action.parameter);
    }
    if (a.action.kind == dsml::ActionKind::kSwitchThreshold ||
        a.action.kind == dsml::ActionKind::kThrottle) {
      r.add("value", format_number(a.action.value));
    }
    r.add("cooldown", std::to_string(a.cooldown_seconds));
    out += fmt::format("  {}\n", r.str());
  }
  return out;
}

LoadResult load_plan(std::string_view text) {
  try {
    return {Loader().load(text), {}};
  } catch (const SchemaError& e) {
    return {std::nullopt, {make_error(e.code, e.what(), e.location)}};
  }
}

}  // namespace hcmon::plan
