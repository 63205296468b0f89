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

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hcmon/diagnostic.hpp"
#include "hcmon/dsml/model.hpp"

namespace hcmon::weaver {

/// A parsed model together with the path it was read from (used in
/// diagnostics and to resolve relative baseline paths).
struct SourceFile {
  std::string path;
  dsml::SourceModel model;
};

enum class NodeType { kRequirement, kTechReq, kComponent, kConnector, kDesign, kContext };
enum class EdgeType { kSatisfies, kImplements, kDesignedBy, kContextualizedBy };

std::string_view to_string(NodeType type);
std::string_view to_string(EdgeType type);

struct Node {
  NodeType type = NodeType::kRequirement;
  std::string id;            // declaration id as written
  std::string qualified_id;  // <model-name>.<id>
  dsml::ModelKind kind = dsml::ModelKind::kHcr;
  std::size_t index = 0;  // position in the typed vector for `type`
  std::optional<std::size_t> parent;  // enclosing requirement / techreq node
  bool leaf = true;
  Location location;

  bool operator==(const Node&) const = default;
};

struct Edge {
  EdgeType type = EdgeType::kSatisfies;
  std::size_t from = 0;
  std::size_t to = 0;

  bool operator==(const Edge&) const = default;
};

/// Every declaration from the five models keyed by qualified id, with the
/// inline references resolved into typed edges. Nested requirement and
/// technical-requirement copies have their `children` cleared; nesting is
/// kept through Node::parent.
struct WovenModel {
  std::array<SourceFile, 5> files;  // indexed by ModelKind
  std::vector<Node> nodes;          // declaration order, kinds in HCR..CONTEXT order
  std::vector<Edge> edges;
  std::vector<Diagnostic> diagnostics;

  std::vector<dsml::Requirement> requirements;
  std::vector<dsml::TechReq> techreqs;
  std::vector<dsml::ArchNode> components;
  std::vector<dsml::Connector> connectors;
  std::vector<dsml::DesignSpec> designs;
  std::vector<dsml::ContextSpec> contexts;

  bool compilable() const { return !has_errors(diagnostics); }

  const SourceFile& file(dsml::ModelKind kind) const {
    return files[static_cast<std::size_t>(kind)];
  }

  std::optional<std::size_t> find(std::string_view qualified_id) const;

  /// Resolves a reference written inside a model: unqualified ids are looked
  /// up in `expected` first; `<model>.<id>` forms are accepted too.
  std::optional<std::size_t> resolve(std::string_view ref, dsml::ModelKind expected) const;

  /// Node indices reachable over one edge of `type`, in declaration order.
  std::vector<std::size_t> targets(std::size_t from, EdgeType type) const;
  std::vector<std::size_t> sources(std::size_t to, EdgeType type) const;

  const dsml::Requirement& requirement(std::size_t node) const;
  const dsml::TechReq& techreq(std::size_t node) const;
  const dsml::ArchNode& component(std::size_t node) const;
  const dsml::DesignSpec& design(std::size_t node) const;
  const dsml::ContextSpec& context(std::size_t node) const;

  bool operator==(const WovenModel& other) const {
    return nodes == other.nodes && edges == other.edges && diagnostics == other.diagnostics;
  }

  std::map<std::string, std::size_t> by_qualified;
  std::array<std::map<std::string, std::size_t>, 5> by_kind;
};

class WeaveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws WeaveError when a model kind is missing or given twice. All other
/// problems are reported as diagnostics on the result, which also carries the
/// output of detect_conflicts when no reference errors were found.
WovenModel weave(std::vector<SourceFile> files);

/// Pairs of technical requirements on the same (metric, args, scope) whose
/// satisfaction intervals do not intersect. Each pair is reported once.
std::vector<Diagnostic> detect_conflicts(const WovenModel& woven);

struct TraceChain {
  std::string requirement;
  std::vector<std::string> tech;
  std::vector<std::string> components;
  std::vector<std::string> designs;
  std::vector<std::string> contexts;

  bool operator==(const TraceChain&) const = default;
};

/// Throws WeaveError for an unknown requirement id.
TraceChain trace(const WovenModel& woven, std::string_view requirement_id);

/// The part of trace(requirement_id) that runs through one satisfying
/// technical requirement: `tech` holds just that id, followed by the
/// components implementing it and their designs and contexts.
TraceChain trace_link(const WovenModel& woven, std::string_view requirement_id,
                      std::string_view techreq_id);

/// Multi-line rendering used by `hcmon weave --trace`.
std::string format_trace(const WovenModel& woven, const TraceChain& chain);

}  // namespace hcmon::weaver
