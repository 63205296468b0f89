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


#include <set>

#include <fmt/format.h>

#include "hcmon/dsml/model.hpp"
#include "hcmon/metrics.hpp"

namespace hcmon::dsml {
namespace {

class Validator {
 public:
  explicit Validator(const SourceModel& model) : model_(model) {}

  std::vector<Diagnostic> run() {
    for (const auto& decl : model_.declarations) {
      std::visit([this](const auto& d) { check(d); }, decl);
    }
    return std::move(out_);
  }

 private:
  void unique(const std::string& id) {
    if (!seen_.insert(id).second) {
      out_.push_back(make_error("duplicate-id", fmt::format("duplicate identifier '{}'", id),
                                model_.location_of(id)));
    }
  }

  void check(const Requirement& r) {
    unique(r.id);
    for (const auto& c : r.children) check(c);
  }

  void check(const TechReq& t) {
    unique(t.id);
    for (const auto& a : t.adaptations) {
      unique(a.id);
      if (a.action.kind == ActionKind::kThrottle && !(a.action.value > 0 && a.action.value <= 1)) {
        out_.push_back(make_error("invalid-action",
                                  fmt::format("throttle factor of '{}' must be in (0, 1]", a.id),
                                  model_.location_of(a.id, "action")));
      }
    }
    if (t.min_samples && *t.min_samples == 0) {
      out_.push_back(make_error("invalid-min-samples",
                                fmt::format("min_samples of '{}' must be at least 1", t.id),
                                model_.location_of(t.id, "min_samples")));
    }
    if (t.window && t.window->size == 0) {
      out_.push_back(make_error("invalid-window",
                                fmt::format("window of '{}' must be positive", t.id),
                                model_.location_of(t.id, "window")));
    }
    if (t.metric && t.metric->name == "range_rate" && t.metric->args.size() == 3) {
      const double low = std::get<double>(t.metric->args[1]);
      const double high = std::get<double>(t.metric->args[2]);
      if (low > high) {
        out_.push_back(make_error("invalid-metric",
                                  fmt::format("range_rate of '{}' has low > high", t.id),
                                  model_.location_of(t.id, "metric")));
      }
    }
    if (t.is_leaf()) {
      std::vector<std::string_view> missing;
      if (!t.metric) missing.push_back("metric");
      if (!t.scope) missing.push_back("scope");
      if (!t.threshold) missing.push_back("threshold");
      if (!t.window) missing.push_back("window");
      if (!missing.empty()) {
        out_.push_back(make_error(
            "incomplete-techreq",
            fmt::format("technical requirement '{}' is missing {}", t.id,
                        fmt::join(missing, ", ")),
            model_.location_of(t.id)));
      }
      if (t.satisfies.empty()) {
        out_.push_back(make_warning(
            "unlinked-techreq", fmt::format("unlinked technical requirement '{}'", t.id),
            model_.location_of(t.id)));
      }
    }
    for (const auto& c : t.children) check(c);
  }

  void check(const ArchNode& n) { unique(n.id); }
  void check(const Connector& c) { unique(c.id); }
  void check(const DesignSpec& d) { unique(d.id); }

  void check(const ContextSpec& c) {
    unique(c.id);
    int baselines = 0;
    for (const auto& ds : c.datasets) {
      unique(ds.name);
      if (ds.role == DatasetRole::kTraining && ds.baseline_path) ++baselines;
    }
    if (baselines > 1) {
      out_.push_back(make_error(
          "multiple-baselines",
          fmt::format("context '{}' declares more than one training baseline", c.id),
          model_.location_of(c.id)));
    }
  }

  const SourceModel& model_;
  std::set<std::string> seen_;
  std::vector<Diagnostic> out_;
};

}  // namespace

std::vector<Diagnostic> validate_model(const SourceModel& model) {
  return Validator(model).run();
}

}  // namespace hcmon::dsml
