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

#include <cmath>
#include <initializer_list>
#include <set>

#include "hcmon/dsml/syntax.hpp"
#include "hcmon/harness.hpp"

namespace hcmon::harness {

namespace {

using dsml::syntax::Block;
using dsml::syntax::Property;
using dsml::syntax::Value;

/// Lowers syntax blocks into ScenarioConfig, collecting every problem.
class Reader {
 public:
  explicit Reader(std::vector<Diagnostic>& diagnostics) : diagnostics_(diagnostics) {}

  void error(std::string code, std::string message, Location at) {
    diagnostics_.push_back(make_error(std::move(code), std::move(message), at));
  }

  /// Properties by key; reports unknown and repeated keys.
  std::map<std::string, const Property*> properties(const Block& b,
                                                    std::initializer_list<std::string_view> keys) {
    std::map<std::string, const Property*> out;
    for (const auto& p : b.properties) {
      bool known = false;
      for (auto k : keys) known = known || k == p.key;
      if (!known) {
        error("unknown-property", fmt::format("unknown property '{}' in {}", p.key, b.keyword),
              p.location);
      } else if (!out.emplace(p.key, &p).second) {
        error("duplicate-property", fmt::format("property '{}' given twice", p.key), p.location);
      }
    }
    return out;
  }

  void no_children(const Block& b) {
    for (const auto& c : b.children) {
      error("unknown-keyword", fmt::format("'{}' cannot appear inside {}", c.keyword, b.keyword),
            c.location);
    }
  }

  const Value* single(const std::map<std::string, const Property*>& props, const Block& b,
                      const std::string& key, bool required) {
    const auto it = props.find(key);
    if (it == props.end()) {
      if (required) {
        error("missing-property", fmt::format("{} {} needs '{}'", b.keyword, b.id, key),
              b.location);
      }
      return nullptr;
    }
    if (it->second->values.size() != 1) {
      error("bad-value", fmt::format("'{}' takes a single value", key), it->second->location);
      return nullptr;
    }
    return &it->second->values.front();
  }

  std::optional<double> number(const std::map<std::string, const Property*>& props,
                               const Block& b, const std::string& key, bool required) {
    const auto* v = single(props, b, key, required);
    if (v == nullptr) return std::nullopt;
    if (v->type != Value::Type::kNumber) {
      error("bad-value", fmt::format("'{}' must be a number", key), v->location);
      return std::nullopt;
    }
    return v->number;
  }

  std::optional<std::uint64_t> count(const std::map<std::string, const Property*>& props,
                                     const Block& b, const std::string& key, bool required) {
    const auto n = number(props, b, key, required);
    if (!n) return std::nullopt;
    if (*n < 0 || std::floor(*n) != *n || *n > 9.0e15) {
      error("bad-value", fmt::format("'{}' must be a non-negative integer", key),
            props.at(key)->location);
      return std::nullopt;
    }
    return static_cast<std::uint64_t>(*n);
  }

  std::optional<std::string> ident(const std::map<std::string, const Property*>& props,
                                   const Block& b, const std::string& key, bool required) {
    const auto* v = single(props, b, key, required);
    if (v == nullptr) return std::nullopt;
    if (v->type != Value::Type::kIdent && v->type != Value::Type::kString) {
      error("bad-value", fmt::format("'{}' must be a name", key), v->location);
      return std::nullopt;
    }
    return v->text;
  }

  std::optional<Mutation> mutation(const Block& b);

 private:
  std::vector<Diagnostic>& diagnostics_;
};

std::optional<MutationType> parse_type(std::string_view name) {
  if (name == "bias") return MutationType::kBias;
  if (name == "leak") return MutationType::kLeak;
  if (name == "speed") return MutationType::kSpeed;
  if (name == "drift") return MutationType::kDrift;
  if (name == "prediction") return MutationType::kPrediction;
  return std::nullopt;
}

bool has_target(MutationType t) {
  return t == MutationType::kBias || t == MutationType::kDrift ||
         t == MutationType::kPrediction;
}

/// `name(args)` into a mutation without onset; error text on failure.
std::optional<Mutation> injection(const Value& v, std::string& why) {
  const auto type = v.type == Value::Type::kCall ? parse_type(v.text) : std::nullopt;
  if (!type) {
    why = "inject must be bias(group, rate), leak(rate), speed(shift), drift(field, shift) "
          "or prediction(class, delta)";
    return std::nullopt;
  }
  Mutation m;
  m.type = *type;
  const std::size_t arity = has_target(m.type) ? 2 : 1;
  if (v.args.size() != arity) {
    why = fmt::format("{} takes {} argument(s)", v.text, arity);
    return std::nullopt;
  }
  if (arity == 2) {
    const auto& t = v.args[0];
    if (t.type != Value::Type::kIdent && t.type != Value::Type::kString) {
      why = fmt::format("first argument of {} must be a name", v.text);
      return std::nullopt;
    }
    m.target = t.text;
  }
  if (v.args.back().type != Value::Type::kNumber) {
    why = fmt::format("last argument of {} must be a number", v.text);
    return std::nullopt;
  }
  m.magnitude = v.args.back().number;
  return m;
}

std::optional<Mutation> Reader::mutation(const Block& b) {
  no_children(b);
  const auto props = properties(b, {"inject", "onset", "duration"});
  const auto* inject = single(props, b, "inject", true);
  const auto onset = count(props, b, "onset", true);
  const auto duration = count(props, b, "duration", false);
  if (inject == nullptr || !onset) return std::nullopt;
  std::string why;
  auto m = injection(*inject, why);
  if (!m) {
    error("bad-value", why, inject->location);
    return std::nullopt;
  }
  m->id = b.id;
  m->onset = *onset;
  m->duration = duration;
  if (duration && *duration == 0) {
    error("bad-value", "duration must be positive", props.at("duration")->location);
    return std::nullopt;
  }
  return m;
}

std::optional<Role> parse_role(std::string_view text) {
  for (auto r : {Role::kRouting, Role::kRecognition, Role::kFeedback, Role::kNavigation}) {
    if (to_string(r) == text) return r;
  }
  return std::nullopt;
}

}  // namespace

std::string_view to_string(Role role) {
  switch (role) {
    case Role::kRouting:
      return "routing";
    case Role::kRecognition:
      return "recognition";
    case Role::kFeedback:
      return "feedback";
    case Role::kNavigation:
      return "navigation";
  }
  return "routing";
}

std::uint64_t Mutation::end(std::uint64_t n_events) const {
  const std::uint64_t last = n_events == 0 ? 0 : n_events - 1;
  if (!duration) return last;
  return std::min(last, onset + *duration - 1);
}

bool Mutation::active(std::uint64_t step) const {
  return step >= onset && (!duration || step - onset < *duration);
}

std::string injection_text(const Mutation& m) {
  const auto mag = dsml::syntax::format_number(m.magnitude);
  switch (m.type) {
    case MutationType::kBias:
      return fmt::format("bias({}, {})", m.target, mag);
    case MutationType::kLeak:
      return fmt::format("leak({})", mag);
    case MutationType::kSpeed:
      return fmt::format("speed({})", mag);
    case MutationType::kDrift:
      return fmt::format("drift({}, {})", m.target, mag);
    case MutationType::kPrediction:
      return fmt::format("prediction({}, {})", m.target, mag);
  }
  return {};
}

std::string_view affected_kind(MutationType type) {
  switch (type) {
    case MutationType::kBias:
      return "fairness";
    case MutationType::kLeak:
      return "privacy";
    case MutationType::kSpeed:
      return "safety";
    case MutationType::kDrift:
      return "input_drift";
    case MutationType::kPrediction:
      return "prediction_drift";
  }
  return "fairness";
}

ScenarioParse parse_scenario(std::string_view text, bool mutations_only) {
  ScenarioParse out;
  auto syntax_out = dsml::syntax::parse_document(text);
  out.diagnostics = std::move(syntax_out.diagnostics);
  if (!syntax_out.document) return out;
  const auto& doc = *syntax_out.document;
  Reader r(out.diagnostics);
  if (doc.kind != "scenario") {
    r.error("unknown-kind", fmt::format("expected a scenario model, found '{}'", doc.kind),
            doc.kind_location);
    return out;
  }

  ScenarioConfig cfg;
  cfg.name = doc.name;
  std::set<std::string> ids;
  bool have_simulation = false;
  for (const auto& b : doc.declarations) {
    if (!ids.insert(b.keyword + " " + b.id).second) {
      r.error("duplicate-id", fmt::format("{} {} declared twice", b.keyword, b.id), b.location);
      continue;
    }
    if (b.keyword == "mutation") {
      if (auto m = r.mutation(b)) out.mutations.push_back(std::move(*m));
      continue;
    }
    if (mutations_only) {
      r.error("unknown-keyword", fmt::format("only mutation blocks are allowed here, found '{}'",
                                             b.keyword),
              b.location);
      continue;
    }
    if (b.keyword == "simulation") {
      r.no_children(b);
      const auto p = r.properties(b, {"seed", "events", "start_ts", "interval_ms"});
      have_simulation = true;
      if (auto v = r.count(p, b, "seed", false)) cfg.seed = *v;
      if (auto v = r.count(p, b, "events", false)) cfg.n_events = *v;
      if (auto v = r.count(p, b, "start_ts", false)) cfg.start_ts = static_cast<std::int64_t>(*v);
      if (auto v = r.count(p, b, "interval_ms", false)) {
        cfg.interval_ms = static_cast<std::int64_t>(*v);
      }
    } else if (b.keyword == "emitter") {
      r.no_children(b);
      const auto p = r.properties(b, {"component", "role", "rate"});
      EmitterConfig e;
      e.id = b.id;
      const auto component = r.ident(p, b, "component", true);
      const auto role = r.ident(p, b, "role", true);
      const auto rate = r.number(p, b, "rate", true);
      if (role && !parse_role(*role)) {
        r.error("bad-value", "role must be routing, recognition, feedback or navigation",
                p.at("role")->location);
      }
      if (!component || !role || !parse_role(*role) || !rate) continue;
      e.component = *component;
      e.role = *parse_role(*role);
      e.rate = *rate;
      cfg.emitters.push_back(std::move(e));
    } else if (b.keyword == "population") {
      const auto p = r.properties(b, {"attribute"});
      cfg.population.attribute = b.id;
      if (auto a = r.ident(p, b, "attribute", false)) cfg.population.attribute = *a;
      for (const auto& g : b.children) {
        if (g.keyword != "group") {
          r.error("unknown-keyword", fmt::format("'{}' cannot appear inside population",
                                                 g.keyword),
                  g.location);
          continue;
        }
        r.no_children(g);
        const auto gp = r.properties(g, {"proportion", "positive_rate"});
        const auto proportion = r.number(gp, g, "proportion", true);
        const auto rate = r.number(gp, g, "positive_rate", true);
        if (proportion && rate) cfg.population.groups.push_back({g.id, *proportion, *rate});
      }
    } else if (b.keyword == "feature" || b.keyword == "signal") {
      r.no_children(b);
      const auto p = r.properties(b, {"mean", "sd", "probability"});
      if (p.count("probability") != 0) {
        if (b.keyword == "feature" || p.count("mean") != 0 || p.count("sd") != 0) {
          r.error("bad-value", "probability is only for flag signals without mean or sd",
                  p.at("probability")->location);
          continue;
        }
        if (auto pr = r.number(p, b, "probability", true)) cfg.flags.push_back({b.id, *pr});
        continue;
      }
      const auto mean = r.number(p, b, "mean", true);
      const auto sd = r.number(p, b, "sd", true);
      if (!mean || !sd) continue;
      (b.keyword == "feature" ? cfg.features : cfg.signals).push_back({b.id, *mean, *sd});
    } else if (b.keyword == "class") {
      r.no_children(b);
      const auto p = r.properties(b, {"proportion"});
      if (auto v = r.number(p, b, "proportion", true)) cfg.classes.push_back({b.id, *v});
    } else if (b.keyword == "recogniser") {
      r.no_children(b);
      const auto p = r.properties(b, {"accuracy", "confidence_mean", "confidence_sd"});
      if (auto v = r.number(p, b, "accuracy", false)) cfg.recogniser.accuracy = *v;
      if (auto v = r.number(p, b, "confidence_mean", false)) cfg.recogniser.confidence_mean = *v;
      if (auto v = r.number(p, b, "confidence_sd", false)) cfg.recogniser.confidence_sd = *v;
    } else {
      r.error("unknown-keyword", fmt::format("unknown keyword '{}' for scenario model",
                                             b.keyword),
              b.location);
    }
  }
  if (!mutations_only && !have_simulation) {
    r.error("missing-property", "scenario needs a simulation block", doc.kind_location);
  }
  if (!has_errors(out.diagnostics) && !mutations_only) {
    for (auto& problem : check_config(cfg, out.mutations)) {
      r.error("invalid-scenario", std::move(problem), doc.kind_location);
    }
  }
  if (!has_errors(out.diagnostics) && !mutations_only) out.config = std::move(cfg);
  return out;
}

std::optional<Mutation> parse_mutation_text(std::string_view text, std::string& error) {
  const auto at = text.rfind('@');
  if (at == std::string_view::npos) {
    error = "expected <injection>@<onset>[+<duration>]";
    return std::nullopt;
  }
  auto when = std::string(text.substr(at + 1));
  std::string duration;
  if (const auto plus = when.find('+'); plus != std::string::npos) {
    duration = when.substr(plus + 1);
    when.resize(plus);
  }
  // Reuse the block syntax so values follow the same rules as scenario files.
  const auto doc = fmt::format(
      "model scenario Inline;\nmutation Inline {{ inject: {}; onset: {};{} }}", text.substr(0, at),
      when,
                               duration.empty() ? "" : " duration: " + duration + ";");
  auto parsed = parse_scenario(doc, true);
  if (has_errors(parsed.diagnostics) || parsed.mutations.size() != 1) {
    error = parsed.diagnostics.empty() ? "malformed mutation" : parsed.diagnostics.front().message;
    return std::nullopt;
  }
  auto m = std::move(parsed.mutations.front());
  m.id = std::string(text);
  return m;
}

std::vector<std::string> check_config(const ScenarioConfig& c,
                                      const std::vector<Mutation>& mutations) {
  std::vector<std::string> out;
  constexpr double kTolerance = 1e-9;
  const auto probability = [&](double p, const std::string& what) {
    if (!(p >= 0.0 && p <= 1.0)) out.push_back(fmt::format("{} must be in [0, 1]", what));
  };
  if (c.interval_ms <= 0) out.push_back("interval_ms must be positive");

  double rates = 0.0;
  std::set<Role> roles;
  for (const auto& e : c.emitters) {
    probability(e.rate, "rate of emitter " + e.id);
    rates += e.rate;
    roles.insert(e.role);
  }
  if (rates > 1.0 + kTolerance) {
    out.push_back(fmt::format("emitter rates sum to {}, more than 1",
                              dsml::syntax::format_number(rates)));
  }
  if (roles.count(Role::kRouting) != 0 && c.population.groups.empty()) {
    out.push_back("routing emitters need a population with groups");
  }
  if (roles.count(Role::kRecognition) != 0 && c.classes.empty()) {
    out.push_back("recognition emitters need classes");
  }

  const auto proportions = [&](double sum, const std::string& what) {
    if (std::abs(sum - 1.0) > kTolerance) {
      out.push_back(fmt::format("{} proportions sum to {}, not 1", what,
                                dsml::syntax::format_number(sum)));
    }
  };
  if (!c.population.groups.empty()) {
    double sum = 0.0;
    for (const auto& g : c.population.groups) {
      probability(g.proportion, "proportion of group " + g.name);
      probability(g.positive_rate, "positive_rate of group " + g.name);
      sum += g.proportion;
    }
    proportions(sum, "group");
  }
  if (!c.classes.empty()) {
    double sum = 0.0;
    for (const auto& k : c.classes) {
      probability(k.proportion, "proportion of class " + k.name);
      sum += k.proportion;
    }
    proportions(sum, "class");
  }
  for (const auto& f : c.flags) probability(f.probability, "probability of signal " + f.name);
  probability(c.recogniser.accuracy, "recogniser accuracy");
  for (const auto& g : c.features) {
    if (!(g.sd >= 0.0)) out.push_back("sd of feature " + g.name + " must be non-negative");
  }
  for (const auto& g : c.signals) {
    if (!(g.sd >= 0.0)) out.push_back("sd of signal " + g.name + " must be non-negative");
  }

  const auto named = [](const auto& items, const std::string& name) {
    for (const auto& i : items) {
      if (i.name == name) return true;
    }
    return false;
  };
  for (const auto& m : mutations) {
    const auto label = fmt::format("mutation {}", m.id);
    if (m.onset >= c.n_events) {
      out.push_back(fmt::format("{} onset {} is not before the stream end {}", label, m.onset,
                                c.n_events));
    }
    switch (m.type) {
      case MutationType::kBias:
        if (!named(c.population.groups, m.target)) {
          out.push_back(fmt::format("{} names unknown group {}", label, m.target));
        }
        probability(m.magnitude, label + " rate");
        break;
      case MutationType::kLeak:
        if (c.flags.empty()) out.push_back(label + " needs a flag signal");
        probability(m.magnitude, label + " rate");
        break;
      case MutationType::kSpeed:
        if (!named(c.signals, "speed")) out.push_back(label + " needs a speed signal");
        break;
      case MutationType::kDrift:
        if (!named(c.features, m.target)) {
          out.push_back(fmt::format("{} names unknown feature {}", label, m.target));
        }
        break;
      case MutationType::kPrediction: {
        const ClassConfig* k = nullptr;
        for (const auto& cls : c.classes) {
          if (cls.name == m.target) k = &cls;
        }
        if (k == nullptr) {
          out.push_back(fmt::format("{} names unknown class {}", label, m.target));
        } else {
          probability(k->proportion + m.magnitude, label + " shifted proportion");
          if (k->proportion >= 1.0) out.push_back(label + " cannot shift the only class");
        }
        break;
      }
    }
  }
  return out;
}

}  // namespace hcmon::harness
