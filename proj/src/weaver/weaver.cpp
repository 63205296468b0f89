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


#include "hcmon/weaver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <fmt/format.h>

namespace hcmon::weaver {

using dsml::ModelKind;

std::string_view to_string(NodeType type) {
  switch (type) {
    case NodeType::kRequirement:
      return "requirement";
    case NodeType::kTechReq:
      return "techreq";
    case NodeType::kComponent:
      return "component";
    case NodeType::kConnector:
      return "connector";
    case NodeType::kDesign:
      return "design";
    case NodeType::kContext:
      return "context";
  }
  return "requirement";
}

std::string_view to_string(EdgeType type) {
  switch (type) {
    case EdgeType::kSatisfies:
      return "SATISFIES";
    case EdgeType::kImplements:
      return "IMPLEMENTS";
    case EdgeType::kDesignedBy:
      return "DESIGNED_BY";
    case EdgeType::kContextualizedBy:
      return "CONTEXTUALIZED_BY";
  }
  return "SATISFIES";
}

// --- WovenModel accessors ---------------------------------------------------

std::optional<std::size_t> WovenModel::find(std::string_view qualified_id) const {
  const auto it = by_qualified.find(std::string(qualified_id));
  if (it == by_qualified.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> WovenModel::resolve(std::string_view ref, ModelKind expected) const {
  const auto& local = by_kind[static_cast<std::size_t>(expected)];
  if (const auto it = local.find(std::string(ref)); it != local.end()) return it->second;
  const std::string prefix = file(expected).model.name + ".";
  if (ref.substr(0, prefix.size()) == prefix) {
    if (const auto it = local.find(std::string(ref.substr(prefix.size()))); it != local.end()) {
      return it->second;
    }
  }
  return std::nullopt;
}

std::vector<std::size_t> WovenModel::targets(std::size_t from, EdgeType type) const {
  std::vector<std::size_t> out;
  for (const auto& e : edges) {
    if (e.type == type && e.from == from) out.push_back(e.to);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> WovenModel::sources(std::size_t to, EdgeType type) const {
  std::vector<std::size_t> out;
  for (const auto& e : edges) {
    if (e.type == type && e.to == to) out.push_back(e.from);
  }
  std::sort(out.begin(), out.end());
  return out;
}

const dsml::Requirement& WovenModel::requirement(std::size_t node) const {
  return requirements.at(nodes.at(node).index);
}
const dsml::TechReq& WovenModel::techreq(std::size_t node) const {
  return techreqs.at(nodes.at(node).index);
}
const dsml::ArchNode& WovenModel::component(std::size_t node) const {
  return components.at(nodes.at(node).index);
}
const dsml::DesignSpec& WovenModel::design(std::size_t node) const {
  return designs.at(nodes.at(node).index);
}
const dsml::ContextSpec& WovenModel::context(std::size_t node) const {
  return contexts.at(nodes.at(node).index);
}

namespace {

class Weaver {
 public:
  explicit Weaver(WovenModel& w) : w_(w) {}

  void run() {
    flatten();
    resolve_references();
    warn_unmonitored();
    if (!has_errors(w_.diagnostics)) {
      auto conflicts = detect_conflicts(w_);
      w_.diagnostics.insert(w_.diagnostics.end(), conflicts.begin(), conflicts.end());
    }
    sort_diagnostics();
  }

 private:
  // --- flattening -----------------------------------------------------------

  std::size_t add_node(NodeType type, const std::string& id, ModelKind kind, std::size_t index,
                       std::optional<std::size_t> parent) {
    const auto& file = w_.file(kind);
    Node n;
    n.type = type;
    n.id = id;
    n.qualified_id = fmt::format("{}.{}", file.model.name, id);
    n.kind = kind;
    n.index = index;
    n.parent = parent;
    n.location = file.model.location_of(id);
    const std::size_t pos = w_.nodes.size();
    if (!w_.by_qualified.emplace(n.qualified_id, pos).second) {
      error(kind, "duplicate-id", fmt::format("duplicate qualified id '{}'", n.qualified_id),
            n.location);
    }
    w_.by_kind[static_cast<std::size_t>(kind)].try_emplace(id, pos);
    w_.nodes.push_back(std::move(n));
    return pos;
  }

  void add_requirement(const dsml::Requirement& r, std::optional<std::size_t> parent) {
    dsml::Requirement copy = r;
    copy.children.clear();
    w_.requirements.push_back(std::move(copy));
    const auto node = add_node(NodeType::kRequirement, r.id, ModelKind::kHcr,
                               w_.requirements.size() - 1, parent);
    w_.nodes[node].leaf = r.children.empty();
    for (const auto& c : r.children) add_requirement(c, node);
  }

  void add_techreq(const dsml::TechReq& t, std::optional<std::size_t> parent) {
    dsml::TechReq copy = t;
    copy.children.clear();
    w_.techreqs.push_back(std::move(copy));
    const auto node =
        add_node(NodeType::kTechReq, t.id, ModelKind::kTech, w_.techreqs.size() - 1, parent);
    w_.nodes[node].leaf = t.children.empty();
    for (const auto& c : t.children) add_techreq(c, node);
  }

  void flatten() {
    for (const auto& d : w_.file(ModelKind::kHcr).model.declarations) {
      if (const auto* r = std::get_if<dsml::Requirement>(&d)) add_requirement(*r, std::nullopt);
    }
    for (const auto& d : w_.file(ModelKind::kTech).model.declarations) {
      if (const auto* t = std::get_if<dsml::TechReq>(&d)) add_techreq(*t, std::nullopt);
    }
    for (const auto& d : w_.file(ModelKind::kArch).model.declarations) {
      if (const auto* c = std::get_if<dsml::ArchNode>(&d)) {
        w_.components.push_back(*c);
        add_node(NodeType::kComponent, c->id, ModelKind::kArch, w_.components.size() - 1, {});
      } else if (const auto* k = std::get_if<dsml::Connector>(&d)) {
        w_.connectors.push_back(*k);
        add_node(NodeType::kConnector, k->id, ModelKind::kArch, w_.connectors.size() - 1, {});
      }
    }
    for (const auto& d : w_.file(ModelKind::kDesign).model.declarations) {
      if (const auto* s = std::get_if<dsml::DesignSpec>(&d)) {
        w_.designs.push_back(*s);
        add_node(NodeType::kDesign, s->id, ModelKind::kDesign, w_.designs.size() - 1, {});
      }
    }
    for (const auto& d : w_.file(ModelKind::kContext).model.declarations) {
      if (const auto* c = std::get_if<dsml::ContextSpec>(&d)) {
        w_.contexts.push_back(*c);
        add_node(NodeType::kContext, c->id, ModelKind::kContext, w_.contexts.size() - 1, {});
      }
    }
  }

  // --- references -----------------------------------------------------------

  void error(ModelKind kind, std::string code, std::string message, Location at) {
    auto d = make_error(std::move(code), std::move(message), at);
    d.file = w_.file(kind).path;
    w_.diagnostics.push_back(std::move(d));
  }

  void warning(ModelKind kind, std::string code, std::string message, Location at) {
    auto d = make_warning(std::move(code), std::move(message), at);
    d.file = w_.file(kind).path;
    w_.diagnostics.push_back(std::move(d));
  }

  /// Resolves `ref` to a node of `type`, reporting dangling and wrong-kind
  /// references against the declaring node `owner`.
  std::optional<std::size_t> lookup(const Node& owner, std::string_view key,
                                    const std::string& ref, ModelKind expected, NodeType type,
                                    std::string_view code = "dangling-reference") {
    const Location at = w_.file(owner.kind).model.location_of(owner.id, key);
    if (const auto hit = w_.resolve(ref, expected)) {
      const Node& target = w_.nodes[*hit];
      if (target.type == type) return hit;
      error(owner.kind, "wrong-kind",
            fmt::format("'{}' of '{}' names {} '{}', expected a {}", key, owner.id,
                        to_string(target.type), ref, to_string(type)),
            at);
      return std::nullopt;
    }
    for (auto other : dsml::kAllModelKinds) {
      if (other == expected) continue;
      if (w_.resolve(ref, other) || w_.find(ref)) {
        error(owner.kind, "wrong-kind",
              fmt::format("'{}' of '{}' refers to '{}' in the {} model, expected a {}", key,
                          owner.id, ref, dsml::to_string(other), to_string(type)),
              at);
        return std::nullopt;
      }
    }
    if (code == "dangling-reference") {
      error(owner.kind, std::string(code), fmt::format("dangling reference {}", ref), at);
    } else {
      error(owner.kind, std::string(code),
            fmt::format("'{}' of '{}' names undeclared {} '{}'", key, owner.id, to_string(type),
                        ref),
            at);
    }
    return std::nullopt;
  }

  void add_edge(EdgeType type, std::size_t from, std::size_t to) {
    const Edge e{type, from, to};
    if (std::find(w_.edges.begin(), w_.edges.end(), e) == w_.edges.end()) w_.edges.push_back(e);
  }

  void resolve_references() {
    for (std::size_t i = 0; i < w_.nodes.size(); ++i) {
      const Node node = w_.nodes[i];
      switch (node.type) {
        case NodeType::kTechReq: {
          const auto& t = w_.techreq(i);
          for (const auto& ref : t.satisfies) {
            if (auto r = lookup(node, "satisfies", ref, ModelKind::kHcr, NodeType::kRequirement)) {
              add_edge(EdgeType::kSatisfies, i, *r);
            }
          }
          if (t.scope) {
            lookup(node, "scope", *t.scope, ModelKind::kArch, NodeType::kComponent,
                   "unknown-scope");
          }
          for (const auto& a : t.adaptations) {
            if (a.action.kind == dsml::ActionKind::kShutdown ||
                a.action.kind == dsml::ActionKind::kThrottle ||
                a.action.kind == dsml::ActionKind::kSwitchThreshold) {
              const Node adaptation_owner{NodeType::kTechReq, a.id, {}, ModelKind::kTech, 0, {},
                                          true, {}};
              lookup(adaptation_owner, "action", a.action.target, ModelKind::kArch,
                     NodeType::kComponent);
            }
          }
          break;
        }
        case NodeType::kComponent: {
          for (const auto& ref : w_.component(i).implements) {
            if (auto t = lookup(node, "implements", ref, ModelKind::kTech, NodeType::kTechReq)) {
              add_edge(EdgeType::kImplements, i, *t);
            }
          }
          break;
        }
        case NodeType::kConnector: {
          const auto& c = w_.connectors[node.index];
          lookup(node, "from", c.from, ModelKind::kArch, NodeType::kComponent);
          lookup(node, "to", c.to, ModelKind::kArch, NodeType::kComponent);
          break;
        }
        case NodeType::kDesign: {
          const auto& d = w_.design(i);
          if (auto c = lookup(node, "for", d.for_component, ModelKind::kArch,
                              NodeType::kComponent)) {
            if (w_.component(*c).kind != dsml::ComponentKind::kMl) {
              error(node.kind, "design-target",
                    fmt::format("design '{}' is for '{}', which is not an ml component", d.id,
                                d.for_component),
                    w_.file(node.kind).model.location_of(d.id, "for"));
            } else {
              add_edge(EdgeType::kDesignedBy, *c, i);
            }
          }
          break;
        }
        case NodeType::kContext: {
          const auto& c = w_.context(i);
          if (auto comp = lookup(node, "for", c.for_component, ModelKind::kArch,
                                 NodeType::kComponent)) {
            add_edge(EdgeType::kContextualizedBy, *comp, i);
          }
          break;
        }
        case NodeType::kRequirement:
          break;
      }
    }
  }

  void warn_unmonitored() {
    for (std::size_t i = 0; i < w_.nodes.size(); ++i) {
      const Node& n = w_.nodes[i];
      if (n.type == NodeType::kRequirement && n.leaf &&
          w_.sources(i, EdgeType::kSatisfies).empty()) {
        warning(n.kind, "unmonitored-requirement",
                fmt::format("unmonitored requirement {}", n.id), n.location);
      }
      if (n.type == NodeType::kComponent && w_.component(i).kind == dsml::ComponentKind::kMl &&
          w_.targets(i, EdgeType::kDesignedBy).empty()) {
        warning(n.kind, "missing-design",
                fmt::format("ml component {} has no design specification", n.id), n.location);
      }
    }
  }

  void sort_diagnostics() {
    auto rank = [this](const Diagnostic& d) {
      for (std::size_t k = 0; k < w_.files.size(); ++k) {
        if (w_.files[k].path == d.file) return k;
      }
      return w_.files.size();
    };
    std::stable_sort(w_.diagnostics.begin(), w_.diagnostics.end(),
                     [&](const Diagnostic& a, const Diagnostic& b) {
                       const auto ra = rank(a);
                       const auto rb = rank(b);
                       if (ra != rb) return ra < rb;
                       return a.location < b.location;
                     });
  }

  WovenModel& w_;
};

// --- conflicts ---------------------------------------------------------------

struct Interval {
  double lo;
  double hi;
  bool lo_closed;
  bool hi_closed;
};

std::vector<Interval> satisfaction_set(const dsml::Threshold& t) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  const double b = t.bound;
  switch (t.comparator) {
    case dsml::Comparator::kLt:
      return {{-inf, b, false, false}};
    case dsml::Comparator::kLe:
      return {{-inf, b, false, true}};
    case dsml::Comparator::kGt:
      return {{b, inf, false, false}};
    case dsml::Comparator::kGe:
      return {{b, inf, true, false}};
    case dsml::Comparator::kEq:
      return {{b, b, true, true}};
    case dsml::Comparator::kNe:
      return {{-inf, b, false, false}, {b, inf, false, false}};
  }
  return {};
}

bool intersects(const Interval& a, const Interval& b) {
  double lo = a.lo;
  bool lo_closed = a.lo_closed;
  if (b.lo > lo) {
    lo = b.lo;
    lo_closed = b.lo_closed;
  } else if (b.lo == lo) {
    lo_closed = lo_closed && b.lo_closed;
  }
  double hi = a.hi;
  bool hi_closed = a.hi_closed;
  if (b.hi < hi) {
    hi = b.hi;
    hi_closed = b.hi_closed;
  } else if (b.hi == hi) {
    hi_closed = hi_closed && b.hi_closed;
  }
  return lo < hi || (lo == hi && lo_closed && hi_closed);
}

bool satisfiable_together(const dsml::Threshold& a, const dsml::Threshold& b) {
  for (const auto& x : satisfaction_set(a)) {
    for (const auto& y : satisfaction_set(b)) {
      if (intersects(x, y)) return true;
    }
  }
  return false;
}

}  // namespace

WovenModel weave(std::vector<SourceFile> files) {
  WovenModel w;
  std::array<bool, 5> seen{};
  for (auto& f : files) {
    const auto k = static_cast<std::size_t>(f.model.kind);
    if (seen[k]) {
      throw WeaveError(
          fmt::format("duplicate model kind {} ({})", dsml::to_string(f.model.kind), f.path));
    }
    seen[k] = true;
    w.files[k] = std::move(f);
  }
  for (auto kind : dsml::kAllModelKinds) {
    if (!seen[static_cast<std::size_t>(kind)]) {
      throw WeaveError(fmt::format("missing model kind {}", dsml::to_string(kind)));
    }
  }
  Weaver(w).run();
  return w;
}

std::vector<Diagnostic> detect_conflicts(const WovenModel& w) {
  struct Candidate {
    std::size_t node;
    std::size_t scope;
  };
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < w.nodes.size(); ++i) {
    if (w.nodes[i].type != NodeType::kTechReq) continue;
    const auto& t = w.techreq(i);
    if (!t.metric || !t.threshold || !t.scope) continue;
    const auto scope = w.resolve(*t.scope, ModelKind::kArch);
    if (!scope) continue;
    candidates.push_back({i, *scope});
  }

  std::vector<Diagnostic> out;
  for (std::size_t a = 0; a < candidates.size(); ++a) {
    for (std::size_t b = a + 1; b < candidates.size(); ++b) {
      const auto& ta = w.techreq(candidates[a].node);
      const auto& tb = w.techreq(candidates[b].node);
      if (candidates[a].scope != candidates[b].scope || *ta.metric != *tb.metric) continue;
      if (satisfiable_together(*ta.threshold, *tb.threshold)) continue;
      // Report against whichever of the pair is declared later.
      const Node& later = w.nodes[candidates[b].node];
      const bool swap = tb.id < ta.id;
      const auto& first = swap ? tb : ta;
      const auto& second = swap ? ta : tb;
      auto d = make_error(
          "conflict",
          fmt::format("conflicting requirements {} and {}: {} {} and {} {} on {} cannot both hold",
                      first.id, second.id, dsml::to_string(*first.metric),
                      dsml::to_string(*first.threshold), dsml::to_string(*second.metric),
                      dsml::to_string(*second.threshold),
                      w.nodes[candidates[a].scope].id),
          w.file(ModelKind::kTech).model.location_of(later.id, "threshold"));
      d.file = w.file(ModelKind::kTech).path;
      out.push_back(std::move(d));
    }
  }
  return out;
}

namespace {

std::size_t require_node(const WovenModel& w, std::string_view id, ModelKind kind,
                         NodeType type) {
  const auto node = w.resolve(id, kind);
  if (!node || w.nodes[*node].type != type) {
    throw WeaveError(fmt::format("unknown {} '{}'", to_string(type), id));
  }
  return *node;
}

TraceChain chain_through(const WovenModel& w, std::size_t req,
                         const std::vector<std::size_t>& tech) {
  TraceChain chain;
  chain.requirement = w.nodes[req].id;
  std::set<std::size_t> components;
  for (auto t : tech) {
    chain.tech.push_back(w.nodes[t].id);
    for (auto c : w.sources(t, EdgeType::kImplements)) components.insert(c);
  }
  std::set<std::size_t> designs;
  std::set<std::size_t> contexts;
  for (auto c : components) {
    chain.components.push_back(w.nodes[c].id);
    for (auto d : w.targets(c, EdgeType::kDesignedBy)) designs.insert(d);
    for (auto x : w.targets(c, EdgeType::kContextualizedBy)) contexts.insert(x);
  }
  for (auto d : designs) chain.designs.push_back(w.nodes[d].id);
  for (auto x : contexts) chain.contexts.push_back(w.nodes[x].id);
  return chain;
}

}  // namespace

TraceChain trace(const WovenModel& w, std::string_view requirement_id) {
  const auto req = require_node(w, requirement_id, ModelKind::kHcr, NodeType::kRequirement);
  return chain_through(w, req, w.sources(req, EdgeType::kSatisfies));
}

TraceChain trace_link(const WovenModel& w, std::string_view requirement_id,
                      std::string_view techreq_id) {
  const auto req = require_node(w, requirement_id, ModelKind::kHcr, NodeType::kRequirement);
  const auto tech = require_node(w, techreq_id, ModelKind::kTech, NodeType::kTechReq);
  return chain_through(w, req, {tech});
}

std::string format_trace(const WovenModel& w, const TraceChain& chain) {
  auto describe = [](const std::string& text) {
    return text.empty() ? std::string() : fmt::format(": {}", text);
  };
  std::string out;
  const auto req = *w.resolve(chain.requirement, ModelKind::kHcr);
  out += fmt::format("requirement {}{}\n", chain.requirement,
                     describe(w.requirement(req).description));
  for (const auto& id : chain.tech) {
    const auto n = *w.resolve(id, ModelKind::kTech);
    out += fmt::format("  techreq {}{}\n", id, describe(w.techreq(n).description));
  }
  for (const auto& id : chain.components) {
    const auto n = *w.resolve(id, ModelKind::kArch);
    const auto& c = w.component(n);
    out += fmt::format("    component {} ({}){}\n", id, dsml::to_string(c.kind),
                       describe(c.description));
  }
  for (const auto& id : chain.designs) {
    const auto n = *w.resolve(id, ModelKind::kDesign);
    const auto& d = w.design(n);
    out += fmt::format("      design {} (for {}){}\n", id, d.for_component,
                       describe(d.algorithm.empty() ? d.description : d.algorithm));
  }
  for (const auto& id : chain.contexts) {
    const auto n = *w.resolve(id, ModelKind::kContext);
    const auto& c = w.context(n);
    out += fmt::format("        context {} (for {}){}\n", id, c.for_component,
                       describe(c.description));
    for (const auto& ds : c.datasets) {
      out += fmt::format("          dataset {} ({}){}\n", ds.name, dsml::to_string(ds.role),
                         describe(ds.source));
    }
  }
  return out;
}

}  // namespace hcmon::weaver
