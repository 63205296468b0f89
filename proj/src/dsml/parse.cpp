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


#include <cmath>
#include <set>

#include <fmt/format.h>

#include "hcmon/dsml/model.hpp"
#include "hcmon/dsml/syntax.hpp"
#include "hcmon/metrics.hpp"

namespace hcmon::dsml {
namespace {

using syntax::Block;
using syntax::Property;
using syntax::Value;

bool is_whole(double x) { return std::isfinite(x) && x >= 0 && std::floor(x) == x && x < 1e18; }

/// Lowers an untyped syntax document into a typed SourceModel, collecting
/// every schema diagnostic instead of stopping at the first one.
class Lowering {
 public:
  Lowering(ModelKind kind, std::vector<Diagnostic>& diagnostics)
      : kind_(kind), diagnostics_(diagnostics) {}

  SourceModel lower(const syntax::Document& doc) {
    SourceModel model;
    model.kind = kind_;
    model.name = doc.name;
    spans_ = &model.source_span_index;
    for (const auto& block : doc.declarations) {
      if (auto decl = lower_top(block)) model.declarations.push_back(std::move(*decl));
    }
    return model;
  }

 private:
  // --- diagnostics ----------------------------------------------------------

  void error(std::string code, std::string message, Location at) {
    diagnostics_.push_back(make_error(std::move(code), std::move(message), at));
  }

  void record_decl(const Block& b) {
    if (!ids_.insert(b.id).second) {
      error("duplicate-id", fmt::format("duplicate identifier '{}'", b.id), b.location);
      return;
    }
    (*spans_)[b.id] = b.location;
    for (const auto& p : b.properties) (*spans_)[fmt::format("{}:{}", b.id, p.key)] = p.location;
  }

  // Returns properties by key, reporting unknown and repeated keys.
  std::map<std::string, const Property*> properties(const Block& b,
                                                    std::initializer_list<std::string_view> known) {
    std::map<std::string, const Property*> out;
    for (const auto& p : b.properties) {
      bool ok = false;
      for (auto k : known) ok = ok || k == p.key;
      if (!ok) {
        error("unknown-property",
              fmt::format("unknown property '{}' in {} '{}'", p.key, b.keyword, b.id), p.location);
        continue;
      }
      if (!out.emplace(p.key, &p).second) {
        error("duplicate-property", fmt::format("property '{}' given twice in '{}'", p.key, b.id),
              p.location);
      }
    }
    return out;
  }

  const Value* single(const Property& p) {
    if (p.values.size() != 1) {
      error("bad-value", fmt::format("property '{}' takes exactly one value", p.key), p.location);
      return nullptr;
    }
    return &p.values.front();
  }

  bool require(const std::map<std::string, const Property*>& props, const Block& b,
               std::string_view key) {
    if (props.count(std::string(key))) return true;
    error("missing-property",
          fmt::format("{} '{}' is missing required property '{}'", b.keyword, b.id, key),
          b.location);
    return false;
  }

  std::optional<std::string> text_of(const Property& p) {
    const Value* v = single(p);
    if (!v) return std::nullopt;
    if (v->type != Value::Type::kString) {
      error("bad-value", fmt::format("property '{}' expects a string", p.key), v->location);
      return std::nullopt;
    }
    return v->text;
  }

  std::optional<std::string> ident_of(const Property& p) {
    const Value* v = single(p);
    if (!v) return std::nullopt;
    if (v->type != Value::Type::kIdent) {
      error("bad-value", fmt::format("property '{}' expects an identifier", p.key), v->location);
      return std::nullopt;
    }
    return v->text;
  }

  std::vector<std::string> ident_list(const Property& p) {
    std::vector<std::string> out;
    for (const auto& v : p.values) {
      if (v.type != Value::Type::kIdent) {
        error("bad-value", fmt::format("property '{}' expects identifiers", p.key), v.location);
        continue;
      }
      out.push_back(v.text);
    }
    return out;
  }

  std::optional<ParamValue> param_of(const Property& p) {
    const Value* v = single(p);
    if (!v) return std::nullopt;
    switch (v->type) {
      case Value::Type::kNumber:
        return ParamValue{v->number};
      case Value::Type::kString:
      case Value::Type::kIdent:
        return ParamValue{v->text};
      default:
        error("bad-value", fmt::format("property '{}' expects a number or string", p.key),
              v->location);
        return std::nullopt;
    }
  }

  std::optional<Threshold> threshold_of(const Property& p) {
    const Value* v = p.values.size() == 1 ? &p.values.front() : nullptr;
    if (!v || v->type != Value::Type::kComparison) {
      error("malformed-threshold", "malformed threshold: expected comparator and number",
            v ? v->location : p.location);
      return std::nullopt;
    }
    return Threshold{*parse_comparator(v->text), v->number};
  }

  std::optional<Window> window_of(const Property& p) {
    const Value* v = p.values.size() == 1 ? &p.values.front() : nullptr;
    if (!v || v->type != Value::Type::kQuantity || !is_whole(v->number)) {
      error("malformed-window",
            "malformed window: expected a whole number with unit ev, s, m or h",
            v ? v->location : p.location);
      return std::nullopt;
    }
    const auto n = static_cast<std::uint64_t>(v->number);
    if (v->unit == "ev") return Window{WindowMode::kCount, n};
    const std::uint64_t scale = v->unit == "h" ? 3600 : v->unit == "m" ? 60 : 1;
    return Window{WindowMode::kTime, n * scale};
  }

  std::optional<std::uint64_t> cooldown_of(const Property& p) {
    const Value* v = single(p);
    if (!v) return std::nullopt;
    if (v->type != Value::Type::kQuantity || v->unit == "ev" || !is_whole(v->number)) {
      error("bad-value", "cooldown expects a whole duration in s, m or h", v->location);
      return std::nullopt;
    }
    const std::uint64_t scale = v->unit == "h" ? 3600 : v->unit == "m" ? 60 : 1;
    return static_cast<std::uint64_t>(v->number) * scale;
  }

  std::optional<MetricRef> metric_of(const Property& p) {
    const Value* v = single(p);
    if (!v) return std::nullopt;
    if (v->type != Value::Type::kIdent && v->type != Value::Type::kCall) {
      error("bad-value", "metric expects a catalog name", v->location);
      return std::nullopt;
    }
    const auto* entry = metrics::find_metric(v->text);
    if (!entry) {
      error("unknown-metric", fmt::format("unknown metric '{}'", v->text), v->location);
      return std::nullopt;
    }
    if (v->args.size() != entry->args.size()) {
      error("malformed-metric",
            fmt::format("metric '{}' takes {} argument(s), got {}", v->text, entry->args.size(),
                        v->args.size()),
            v->location);
      return std::nullopt;
    }
    MetricRef ref{v->text, {}};
    for (std::size_t i = 0; i < v->args.size(); ++i) {
      const Value& a = v->args[i];
      switch (entry->args[i]) {
        case metrics::ArgType::kField:
          if (a.type != Value::Type::kIdent) {
            error("malformed-metric", fmt::format("argument {} of '{}' must be a field name",
                                                  i + 1, v->text),
                  a.location);
            return std::nullopt;
          }
          ref.args.emplace_back(a.text);
          break;
        case metrics::ArgType::kNumber:
          if (a.type != Value::Type::kNumber) {
            error("malformed-metric",
                  fmt::format("argument {} of '{}' must be a number", i + 1, v->text), a.location);
            return std::nullopt;
          }
          ref.args.emplace_back(a.number);
          break;
        case metrics::ArgType::kCount:
          if (a.type != Value::Type::kNumber || !is_whole(a.number) || a.number < 2) {
            error("malformed-metric",
                  fmt::format("argument {} of '{}' must be a whole number >= 2", i + 1, v->text),
                  a.location);
            return std::nullopt;
          }
          ref.args.emplace_back(a.number);
          break;
      }
    }
    return ref;
  }

  std::optional<AdaptationAction> action_of(const Property& p) {
    const Value* v = single(p);
    if (!v) return std::nullopt;
    const auto kind = parse_action_kind(v->text);
    auto bad = [&](std::string_view why) {
      error("bad-value", fmt::format("malformed action: {}", why), v->location);
      return std::nullopt;
    };
    if (!kind || (v->type != Value::Type::kIdent && v->type != Value::Type::kCall)) {
      return bad("expected obfuscate, shutdown, throttle, switch_threshold or notify");
    }
    AdaptationAction a;
    a.kind = *kind;
    const auto& args = v->args;
    auto ident_arg = [&](std::size_t i) {
      return i < args.size() && args[i].type == Value::Type::kIdent;
    };
    auto number_arg = [&](std::size_t i) {
      return i < args.size() && args[i].type == Value::Type::kNumber;
    };
    switch (*kind) {
      case ActionKind::kNotify:
        if (!args.empty()) return bad("notify takes no arguments");
        break;
      case ActionKind::kObfuscate:
      case ActionKind::kShutdown:
        if (args.size() != 1 || !ident_arg(0)) return bad(fmt::format("{}(name)", v->text));
        a.target = args[0].text;
        break;
      case ActionKind::kThrottle:
        if (args.size() != 2 || !ident_arg(0) || !number_arg(1)) {
          return bad("throttle(component, factor)");
        }
        a.target = args[0].text;
        a.value = args[1].number;
        break;
      case ActionKind::kSwitchThreshold:
        if (args.size() != 3 || !ident_arg(0) || !ident_arg(1) || !number_arg(2)) {
          return bad("switch_threshold(component, name, value)");
        }
        a.target = args[0].text;
        a.parameter = args[1].text;
        a.value = args[2].number;
        break;
    }
    return a;
  }

  std::optional<RequirementCategory> category_of(const Property& p) {
    const Value* v = single(p);
    if (!v) return std::nullopt;
    if (v->type == Value::Type::kIdent) {
      for (const auto& [k, name] : {std::pair{Category::kFairness, "fairness"},
                                    std::pair{Category::kPrivacy, "privacy"},
                                    std::pair{Category::kSafety, "safety"},
                                    std::pair{Category::kWellbeing, "wellbeing"},
                                    std::pair{Category::kTransparency, "transparency"},
                                    std::pair{Category::kValues, "values"}}) {
        if (v->text == name) return RequirementCategory{k, {}};
      }
    }
    if (v->type == Value::Type::kCall && v->text == "other" && v->args.size() == 1 &&
        (v->args[0].type == Value::Type::kString || v->args[0].type == Value::Type::kIdent)) {
      return RequirementCategory{Category::kOther, v->args[0].text};
    }
    error("bad-value",
          "category must be fairness, privacy, safety, wellbeing, transparency, values or "
          "other(\"label\")",
          v->location);
    return std::nullopt;
  }

  void unknown_nested(const Block& parent, const Block& child) {
    error("unknown-keyword",
          fmt::format("'{}' is not allowed inside {} '{}'", child.keyword, parent.keyword,
                      parent.id),
          child.location);
  }

  // --- per-kind lowering ----------------------------------------------------

  std::optional<Declaration> lower_top(const Block& b) {
    switch (kind_) {
      case ModelKind::kHcr:
        if (b.keyword == "requirement") return lower_requirement(b);
        break;
      case ModelKind::kTech:
        if (b.keyword == "techreq") return lower_techreq(b);
        break;
      case ModelKind::kArch:
        if (b.keyword == "component") return lower_component(b);
        if (b.keyword == "connector") return lower_connector(b);
        break;
      case ModelKind::kDesign:
        if (b.keyword == "design") return lower_design(b);
        break;
      case ModelKind::kContext:
        if (b.keyword == "context") return lower_context(b);
        break;
    }
    error("unknown-keyword",
          fmt::format("unknown keyword '{}' for {} model", b.keyword, to_string(kind_)),
          b.location);
    return std::nullopt;
  }

  Requirement lower_requirement(const Block& b) {
    record_decl(b);
    Requirement r;
    r.id = b.id;
    const auto props = properties(b, {"description", "category", "severity"});
    if (auto it = props.find("description"); it != props.end()) {
      r.description = text_of(*it->second).value_or("");
    }
    if (require(props, b, "category")) {
      if (auto c = category_of(*props.at("category"))) r.category = *c;
    }
    if (require(props, b, "severity")) {
      if (auto s = ident_of(*props.at("severity"))) {
        if (auto c = parse_criticality(*s)) {
          r.severity = *c;
        } else {
          error("bad-value", "severity must be low, medium, high or critical",
                props.at("severity")->values.front().location);
        }
      }
    }
    for (const auto& child : b.children) {
      if (child.keyword == "requirement") {
        r.children.push_back(lower_requirement(child));
      } else {
        unknown_nested(b, child);
      }
    }
    return r;
  }

  TechReq lower_techreq(const Block& b) {
    record_decl(b);
    TechReq t;
    t.id = b.id;
    const auto props = properties(b, {"description", "metric", "scope", "threshold", "window",
                                      "min_samples", "satisfies"});
    for (const auto& [key, p] : props) {
      if (key == "description") {
        t.description = text_of(*p).value_or("");
      } else if (key == "metric") {
        t.metric = metric_of(*p);
      } else if (key == "scope") {
        t.scope = ident_of(*p);
      } else if (key == "threshold") {
        t.threshold = threshold_of(*p);
      } else if (key == "window") {
        t.window = window_of(*p);
      } else if (key == "min_samples") {
        const Value* v = single(*p);
        if (v && v->type == Value::Type::kNumber && is_whole(v->number)) {
          t.min_samples = static_cast<std::uint64_t>(v->number);
        } else if (v) {
          error("bad-value", "min_samples expects a whole number", v->location);
        }
      } else if (key == "satisfies") {
        t.satisfies = ident_list(*p);
      }
    }
    for (const auto& child : b.children) {
      if (child.keyword == "techreq") {
        t.children.push_back(lower_techreq(child));
      } else if (child.keyword == "adaptation") {
        record_decl(child);
        AdaptationDecl a;
        a.id = child.id;
        const auto ap = properties(child, {"action", "cooldown"});
        if (require(ap, child, "action")) {
          if (auto act = action_of(*ap.at("action"))) a.action = *act;
        }
        if (auto it = ap.find("cooldown"); it != ap.end()) {
          a.cooldown_seconds = cooldown_of(*it->second).value_or(kDefaultCooldownSeconds);
        }
        for (const auto& nested : child.children) unknown_nested(child, nested);
        t.adaptations.push_back(std::move(a));
      } else {
        unknown_nested(b, child);
      }
    }
    return t;
  }

  ArchNode lower_component(const Block& b) {
    record_decl(b);
    ArchNode n;
    n.id = b.id;
    const auto props = properties(b, {"description", "kind", "implements"});
    if (auto it = props.find("description"); it != props.end()) {
      n.description = text_of(*it->second).value_or("");
    }
    if (require(props, b, "kind")) {
      if (auto k = ident_of(*props.at("kind"))) {
        if (*k == "ml") {
          n.kind = ComponentKind::kMl;
        } else if (*k == "traditional") {
          n.kind = ComponentKind::kTraditional;
        } else {
          error("bad-value", "component kind must be ml or traditional",
                props.at("kind")->values.front().location);
        }
      }
    }
    if (auto it = props.find("implements"); it != props.end()) {
      n.implements = ident_list(*it->second);
    }
    for (const auto& child : b.children) unknown_nested(b, child);
    return n;
  }

  Connector lower_connector(const Block& b) {
    record_decl(b);
    Connector c;
    c.id = b.id;
    const auto props = properties(b, {"from", "to"});
    if (require(props, b, "from")) c.from = ident_of(*props.at("from")).value_or("");
    if (require(props, b, "to")) c.to = ident_of(*props.at("to")).value_or("");
    for (const auto& child : b.children) unknown_nested(b, child);
    return c;
  }

  void lower_params(const Block& parent, const Block& b, std::map<std::string, ParamValue>& out) {
    const auto key = fmt::format("{}.{}", parent.id, b.id);
    (*spans_)[key] = b.location;
    const auto props = properties(b, {"value"});
    if (!out.count(b.id) && require(props, b, "value")) {
      if (auto v = param_of(*props.at("value"))) out.emplace(b.id, *v);
    } else if (out.count(b.id)) {
      error("duplicate-id", fmt::format("duplicate {} '{}' in '{}'", b.keyword, b.id, parent.id),
            b.location);
    }
    for (const auto& child : b.children) unknown_nested(b, child);
  }

  DesignSpec lower_design(const Block& b) {
    record_decl(b);
    DesignSpec d;
    d.id = b.id;
    const auto props = properties(b, {"description", "for", "algorithm", "framework"});
    if (auto it = props.find("description"); it != props.end()) {
      d.description = text_of(*it->second).value_or("");
    }
    if (require(props, b, "for")) d.for_component = ident_of(*props.at("for")).value_or("");
    if (auto it = props.find("algorithm"); it != props.end()) {
      d.algorithm = text_of(*it->second).value_or("");
    }
    if (auto it = props.find("framework"); it != props.end()) {
      d.framework = text_of(*it->second).value_or("");
    }
    for (const auto& child : b.children) {
      if (child.keyword == "hyperparam") {
        lower_params(b, child, d.hyperparams);
      } else if (child.keyword == "trainmetric") {
        lower_params(b, child, d.train_metrics);
      } else {
        unknown_nested(b, child);
      }
    }
    return d;
  }

  ContextSpec lower_context(const Block& b) {
    record_decl(b);
    ContextSpec c;
    c.id = b.id;
    const auto props =
        properties(b, {"description", "for", "deployment", "sensitive_attributes"});
    if (auto it = props.find("description"); it != props.end()) {
      c.description = text_of(*it->second).value_or("");
    }
    if (require(props, b, "for")) c.for_component = ident_of(*props.at("for")).value_or("");
    if (auto it = props.find("deployment"); it != props.end()) {
      c.deployment = text_of(*it->second).value_or("");
    }
    if (auto it = props.find("sensitive_attributes"); it != props.end()) {
      c.sensitive_attributes = ident_list(*it->second);
    }
    for (const auto& child : b.children) {
      if (child.keyword != "dataset") {
        unknown_nested(b, child);
        continue;
      }
      record_decl(child);
      Dataset ds;
      ds.name = child.id;
      const auto dp = properties(child, {"source", "role", "baseline"});
      if (auto it = dp.find("source"); it != dp.end()) {
        ds.source = text_of(*it->second).value_or("");
      }
      if (require(dp, child, "role")) {
        const auto role = ident_of(*dp.at("role"));
        if (role == "training") {
          ds.role = DatasetRole::kTraining;
        } else if (role == "production") {
          ds.role = DatasetRole::kProduction;
        } else if (role) {
          error("bad-value", "dataset role must be training or production",
                dp.at("role")->values.front().location);
        }
      }
      if (auto it = dp.find("baseline"); it != dp.end()) ds.baseline_path = text_of(*it->second);
      for (const auto& nested : child.children) unknown_nested(child, nested);
      c.datasets.push_back(std::move(ds));
    }
    return c;
  }

  ModelKind kind_;
  std::vector<Diagnostic>& diagnostics_;
  std::set<std::string> ids_;
  std::map<std::string, Location>* spans_ = nullptr;
};

}  // namespace

ParseResult parse_model(std::string_view text, std::optional<ModelKind> expected_kind) {
  ParseResult result;
  auto syntax_out = syntax::parse_document(text);
  if (!syntax_out.document) {
    result.diagnostics = std::move(syntax_out.diagnostics);
    return result;
  }
  const auto& doc = *syntax_out.document;
  const auto kind = parse_model_kind(doc.kind);
  if (!kind) {
    result.diagnostics.push_back(
        make_error("unknown-kind",
                   fmt::format("unknown model kind '{}' (expected hcr, tech, arch, design or "
                               "context)",
                               doc.kind),
                   doc.kind_location));
    return result;
  }
  if (expected_kind && *kind != *expected_kind) {
    result.diagnostics.push_back(make_error(
        "kind-mismatch",
        fmt::format("expected a {} model, found {}", to_string(*expected_kind), doc.kind),
        doc.kind_location));
    return result;
  }
  Lowering lowering(*kind, result.diagnostics);
  SourceModel model = lowering.lower(doc);
  if (!has_errors(result.diagnostics)) result.model = std::move(model);
  return result;
}

}  // namespace hcmon::dsml
