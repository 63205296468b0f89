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

#include "hcmon/dsml/model.hpp"
#include "hcmon/dsml/syntax.hpp"

namespace hcmon::dsml {
namespace {

using syntax::format_number;
using syntax::quote_string;

std::string param_text(const ParamValue& v) {
  if (const auto* s = std::get_if<std::string>(&v)) return quote_string(*s);
  return format_number(std::get<double>(v));
}

std::string window_text(const Window& w) {
  return fmt::format("{} {}", w.size, w.mode == WindowMode::kCount ? "ev" : "s");
}

/// Accumulates one block; renders `keyword id;` when it ends up empty.
class BlockWriter {
 public:
  BlockWriter(std::string keyword, std::string id, int depth)
      : keyword_(std::move(keyword)), id_(std::move(id)), depth_(depth) {}

  void property(std::string_view key, std::string_view value) {
    lines_ += fmt::format("{}{}: {};\n", indent(depth_ + 1), key, value);
  }

  void text_if(std::string_view key, const std::string& value) {
    if (!value.empty()) property(key, quote_string(value));
  }

  void list_if(std::string_view key, const std::vector<std::string>& values) {
    if (!values.empty()) property(key, fmt::format("{}", fmt::join(values, ", ")));
  }

  void child(const std::string& rendered) {
    if (!lines_.empty()) lines_ += '\n';
    lines_ += rendered;
  }

  std::string str() const {
    if (lines_.empty()) return fmt::format("{}{} {};\n", indent(depth_), keyword_, id_);
    return fmt::format("{0}{1} {2} {{\n{3}{0}}}\n", indent(depth_), keyword_, id_, lines_);
  }

  int depth() const { return depth_; }

 private:
  static std::string indent(int depth) {
    return std::string(static_cast<std::size_t>(depth) * 2, ' ');
  }

  std::string keyword_;
  std::string id_;
  int depth_;
  std::string lines_;
};

std::string render(const Requirement& r, int depth) {
  BlockWriter w("requirement", r.id, depth);
  w.text_if("description", r.description);
  w.property("category", to_string(r.category));
  w.property("severity", to_string(r.severity));
  for (const auto& c : r.children) w.child(render(c, depth + 1));
  return w.str();
}

std::string render(const TechReq& t, int depth) {
  BlockWriter w("techreq", t.id, depth);
  w.text_if("description", t.description);
  if (t.metric) w.property("metric", to_string(*t.metric));
  if (t.scope) w.property("scope", *t.scope);
  if (t.threshold) w.property("threshold", to_string(*t.threshold));
  if (t.window) w.property("window", window_text(*t.window));
  if (t.min_samples) w.property("min_samples", std::to_string(*t.min_samples));
  w.list_if("satisfies", t.satisfies);
  for (const auto& a : t.adaptations) {
    BlockWriter aw("adaptation", a.id, depth + 1);
    aw.property("action", to_string(a.action));
    aw.property("cooldown", fmt::format("{} s", a.cooldown_seconds));
    w.child(aw.str());
  }
  for (const auto& c : t.children) w.child(render(c, depth + 1));
  return w.str();
}

std::string render(const ArchNode& n, int depth) {
  BlockWriter w("component", n.id, depth);
  w.text_if("description", n.description);
  w.property("kind", to_string(n.kind));
  w.list_if("implements", n.implements);
  return w.str();
}

std::string render(const Connector& c, int depth) {
  BlockWriter w("connector", c.id, depth);
  w.property("from", c.from);
  w.property("to", c.to);
  return w.str();
}

std::string render(const DesignSpec& d, int depth) {
  BlockWriter w("design", d.id, depth);
  w.text_if("description", d.description);
  w.property("for", d.for_component);
  w.text_if("algorithm", d.algorithm);
  w.text_if("framework", d.framework);
  for (const auto& [name, value] : d.hyperparams) {
    BlockWriter pw("hyperparam", name, depth + 1);
    pw.property("value", param_text(value));
    w.child(pw.str());
  }
  for (const auto& [name, value] : d.train_metrics) {
    BlockWriter pw("trainmetric", name, depth + 1);
    pw.property("value", param_text(value));
    w.child(pw.str());
  }
  return w.str();
}

std::string render(const ContextSpec& c, int depth) {
  BlockWriter w("context", c.id, depth);
  w.text_if("description", c.description);
  w.property("for", c.for_component);
  w.text_if("deployment", c.deployment);
  w.list_if("sensitive_attributes", c.sensitive_attributes);
  for (const auto& ds : c.datasets) {
    BlockWriter dw("dataset", ds.name, depth + 1);
    dw.text_if("source", ds.source);
    dw.property("role", to_string(ds.role));
    if (ds.baseline_path) dw.property("baseline", quote_string(*ds.baseline_path));
    w.child(dw.str());
  }
  return w.str();
}

}  // namespace

std::string serialize_model(const SourceModel& model) {
  std::string out = fmt::format("model {} {};\n", to_string(model.kind), model.name);
  for (const auto& decl : model.declarations) {
    out += '\n';
    out += std::visit([](const auto& d) { return render(d, 0); }, decl);
  }
  return out;
}

}  // namespace hcmon::dsml
