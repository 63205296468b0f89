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
#include <map>
#include <unordered_map>

#include "evaluator_state.hpp"
#include "hcmon/dsml/syntax.hpp"

namespace hcmon::engine {
namespace {

using dsml::syntax::format_number;
using metrics::MetricError;
using metrics::MetricKind;
using metrics::MetricValue;

bool kind_in(const Event& e, std::initializer_list<EventKind> kinds) {
  return std::find(kinds.begin(), kinds.end(), e.kind) != kinds.end();
}

std::optional<double> feature_number(const Event& e, const std::string& name) {
  const auto it = e.features.find(name);
  if (it == e.features.end()) return std::nullopt;
  if (const auto* d = std::get_if<double>(&it->second)) return *d;
  return std::nullopt;
}

const SignalValue* signal(const Event& e, const std::string& name) {
  const auto it = e.signals.find(name);
  return it == e.signals.end() ? nullptr : &it->second;
}

std::string field_arg(const plan::Evaluator& e) {
  return std::get<std::string>(e.metric.args.at(0));
}
double number_arg(const plan::Evaluator& e, std::size_t i) {
  return std::get<double>(e.metric.args.at(i));
}

// --- fairness -----------------------------------------------------------------

struct FairItem {
  bool positive = false;
  std::vector<std::string> groups;  // one per sensitive attribute
};

class FairnessState final : public EvaluatorState {
 public:
  FairnessState(const plan::Evaluator& e, const EngineOptions& o)
      : attrs_(e.sensitive_attributes),
        min_per_group_(e.min_samples),
        dpd_(e.kind() == MetricKind::kDemographicParity),
        window_(e.window, o.time_window_cap),
        counts_(attrs_.size()) {}

  bool accept(const Event& e) override {
    if (e.kind != EventKind::kPrediction || !e.prediction) return false;
    const auto outcome = numeric(*e.prediction);
    if (!outcome) return false;
    FairItem item{*outcome != 0.0, {}};
    for (const auto& a : attrs_) {
      const auto it = e.features.find(a);
      if (it == e.features.end()) return false;
      item.groups.push_back(category_text(it->second));
    }
    push(e.ts, std::move(item));
    return true;
  }

  std::size_t size() const override { return window_.size(); }

  std::optional<MetricValue> compute() const override {
    std::optional<double> value;
    MetricValue out;
    for (std::size_t a = 0; a < attrs_.size(); ++a) {
      if (metrics::eligible_groups(counts_[a], min_per_group_) < 2) continue;
      const MetricValue v =
          dpd_ ? metrics::demographic_parity_from_counts(counts_[a], min_per_group_)
               : metrics::disparate_impact_from_counts(counts_[a], min_per_group_);
      // Several attributes: report the least fair one.
      value = !value ? v.value : dpd_ ? std::max(*value, v.value) : std::min(*value, v.value);
      for (const auto& [g, stat] : v.group_stats) out.group_stats[attrs_[a] + "=" + g] = stat;
    }
    if (!value) return std::nullopt;
    out.value = *value;
    out.n = window_.size();
    return out;
  }

  std::string item_text(std::size_t i) const override {
    const auto& [ts, item] = window_[i];
    std::string out = std::to_string(ts) + (item.positive ? " 1" : " 0");
    for (const auto& g : item.groups) out += " " + g;
    return out;
  }

  Json save() const override {
    Json items = Json::array();
    for (const auto& [ts, item] : window_) {
      items.push_back(Json::array({ts, item.positive, item.groups}));
    }
    return Json{{"items", std::move(items)}};
  }

  void load(const Json& state) override {
    window_.clear();
    counts_.assign(attrs_.size(), {});
    for (const auto& it : state.at("items")) {
      FairItem item{it.at(1).get<bool>(), it.at(2).get<std::vector<std::string>>()};
      if (item.groups.size() != attrs_.size()) throw EngineError("fairness item arity mismatch");
      push(it.at(0).get<std::int64_t>(), std::move(item));
    }
  }

 private:
  void push(std::int64_t ts, FairItem item) {
    add(item, +1);
    window_.push(ts, std::move(item), [this](const FairItem& old) { add(old, -1); });
  }

  void add(const FairItem& item, int sign) {
    for (std::size_t a = 0; a < attrs_.size(); ++a) {
      auto& c = counts_[a][item.groups[a]];
      if (sign > 0) {
        ++c.n;
        if (item.positive) ++c.positives;
      } else {
        --c.n;
        if (item.positive) --c.positives;
        if (c.n == 0) counts_[a].erase(item.groups[a]);
      }
    }
  }

  std::vector<std::string> attrs_;
  std::size_t min_per_group_;
  bool dpd_;
  WindowBuffer<FairItem> window_;
  std::vector<metrics::GroupCounts> counts_;
};

// --- numeric feature drift ------------------------------------------------------

class KsState final : public EvaluatorState {
 public:
  KsState(const plan::Evaluator& e, const BaselineSample& b, const EngineOptions& o)
      : field_(field_arg(e)), reference_(b.numbers), window_(e.window, o.time_window_cap) {
    std::sort(reference_.begin(), reference_.end());
  }

  bool accept(const Event& e) override {
    if (e.kind != EventKind::kPrediction) return false;
    const auto x = feature_number(e, field_);
    if (!x) return false;
    push(e.ts, *x);
    return true;
  }

  std::size_t size() const override { return window_.size(); }

  std::optional<MetricValue> compute() const override {
    if (reference_.empty()) throw MetricError("empty baseline");
    if (sorted_.empty()) return std::nullopt;
    return MetricValue{metrics::ks_statistic_sorted(reference_, sorted_), sorted_.size(), {}};
  }

  std::string item_text(std::size_t i) const override {
    return std::to_string(window_[i].first) + " " + format_number(window_[i].second);
  }

  Json save() const override {
    Json items = Json::array();
    for (const auto& [ts, x] : window_) items.push_back(Json::array({ts, x}));
    return Json{{"items", std::move(items)}};
  }

  void load(const Json& state) override {
    window_.clear();
    sorted_.clear();
    for (const auto& it : state.at("items")) {
      push(it.at(0).get<std::int64_t>(), it.at(1).get<double>());
    }
  }

 private:
  void push(std::int64_t ts, double x) {
    sorted_.insert(std::upper_bound(sorted_.begin(), sorted_.end(), x), x);
    window_.push(ts, x, [this](double old) {
      sorted_.erase(std::lower_bound(sorted_.begin(), sorted_.end(), old));
    });
  }

  std::string field_;
  std::vector<double> reference_;
  WindowBuffer<double> window_;
  std::vector<double> sorted_;
};

class PsiState final : public EvaluatorState {
 public:
  PsiState(const plan::Evaluator& e, const BaselineSample& b, const EngineOptions& o)
      : field_(field_arg(e)), window_(e.window, o.time_window_cap) {
    const int bins = static_cast<int>(number_arg(e, 1));
    try {
      if (b.numbers.empty()) throw MetricError("empty baseline");
      binning_.emplace(b.numbers, bins);
      reference_ = binning_->histogram(b.numbers);
      reference_n_ = b.numbers.size();
      counts_.assign(static_cast<std::size_t>(bins), 0);
    } catch (const MetricError& err) {
      error_ = err.what();
    }
  }

  bool accept(const Event& e) override {
    if (e.kind != EventKind::kPrediction) return false;
    const auto x = feature_number(e, field_);
    if (!x) return false;
    push(e.ts, *x);
    return true;
  }

  std::size_t size() const override { return window_.size(); }

  std::optional<MetricValue> compute() const override {
    if (!error_.empty()) throw MetricError(error_);
    if (window_.size() == 0) return std::nullopt;
    return MetricValue{metrics::psi_from_counts(reference_, reference_n_, counts_, window_.size()),
                       window_.size(),
                       {}};
  }

  std::string item_text(std::size_t i) const override {
    return std::to_string(window_[i].first) + " " + format_number(window_[i].second);
  }

  Json save() const override {
    Json items = Json::array();
    for (const auto& [ts, x] : window_) items.push_back(Json::array({ts, x}));
    return Json{{"items", std::move(items)}};
  }

  void load(const Json& state) override {
    window_.clear();
    std::fill(counts_.begin(), counts_.end(), 0);
    for (const auto& it : state.at("items")) {
      push(it.at(0).get<std::int64_t>(), it.at(1).get<double>());
    }
  }

 private:
  void push(std::int64_t ts, double x) {
    if (binning_) ++counts_[static_cast<std::size_t>(binning_->bin_of(x))];
    window_.push(ts, x, [this](double old) {
      if (binning_) --counts_[static_cast<std::size_t>(binning_->bin_of(old))];
    });
  }

  std::string field_;
  WindowBuffer<double> window_;
  std::optional<metrics::PsiBinning> binning_;
  std::vector<std::size_t> reference_;
  std::size_t reference_n_ = 0;
  std::vector<std::size_t> counts_;
  std::string error_;
};

// --- prediction drift -------------------------------------------------------------

class JsdState final : public EvaluatorState {
 public:
  JsdState(const plan::Evaluator& e, const BaselineSample& b, const EngineOptions& o)
      : window_(e.window, o.time_window_cap) {
    for (const auto& c : b.categories) ++reference_[c];
  }

  bool accept(const Event& e) override {
    if (e.kind != EventKind::kPrediction || !e.prediction) return false;
    push(e.ts, category_text(*e.prediction));
    return true;
  }

  std::size_t size() const override { return window_.size(); }

  std::optional<MetricValue> compute() const override {
    if (reference_.empty()) throw MetricError("empty baseline");
    if (window_.size() == 0) return std::nullopt;
    return MetricValue{metrics::jsd_from_counts(reference_, counts_), window_.size(), {}};
  }

  std::string item_text(std::size_t i) const override {
    return std::to_string(window_[i].first) + " " + window_[i].second;
  }

  Json save() const override {
    Json items = Json::array();
    for (const auto& [ts, c] : window_) items.push_back(Json::array({ts, c}));
    return Json{{"items", std::move(items)}};
  }

  void load(const Json& state) override {
    window_.clear();
    counts_.clear();
    for (const auto& it : state.at("items")) {
      push(it.at(0).get<std::int64_t>(), it.at(1).get<std::string>());
    }
  }

 private:
  void push(std::int64_t ts, std::string c) {
    ++counts_[c];
    window_.push(ts, std::move(c), [this](const std::string& old) {
      if (--counts_[old] == 0) counts_.erase(old);
    });
  }

  metrics::CategoryCounts reference_;
  WindowBuffer<std::string> window_;
  metrics::CategoryCounts counts_;
};

// --- performance ------------------------------------------------------------------

class AccuracyState final : public EvaluatorState {
 public:
  AccuracyState(const plan::Evaluator& e, const EngineOptions& o)
      : window_(e.window, o.time_window_cap), pending_cap_(o.pending_cap) {}

  bool accept(const Event& e) override {
    if (!e.ref_id) return false;
    if (e.kind == EventKind::kPrediction && e.prediction) {
      remember(*e.ref_id, category_text(*e.prediction));
      return false;
    }
    if (e.kind != EventKind::kFeedback || !e.label) return false;
    const auto it = by_ref_.find(*e.ref_id);
    if (it == by_ref_.end()) return false;
    const bool correct = pending_.at(it->second).second == category_text(*e.label);
    pending_.erase(it->second);
    by_ref_.erase(it);
    push(e.ts, correct);
    return true;
  }

  std::size_t size() const override { return window_.size(); }
  std::size_t buffered() const override { return window_.size() + pending_.size(); }

  std::optional<MetricValue> compute() const override {
    if (window_.size() == 0) return std::nullopt;
    return MetricValue{static_cast<double>(correct_) / static_cast<double>(window_.size()),
                       window_.size(),
                       {}};
  }

  std::string item_text(std::size_t i) const override {
    return std::to_string(window_[i].first) + (window_[i].second ? " 1" : " 0");
  }

  Json save() const override {
    Json items = Json::array();
    for (const auto& [ts, ok] : window_) items.push_back(Json::array({ts, ok}));
    Json pending = Json::array();
    for (const auto& [seq, entry] : pending_) {
      pending.push_back(Json::array({seq, entry.first, entry.second}));
    }
    return Json{{"items", std::move(items)},
                {"pending", std::move(pending)},
                {"next_seq", next_seq_}};
  }

  void load(const Json& state) override {
    window_.clear();
    correct_ = 0;
    pending_.clear();
    by_ref_.clear();
    for (const auto& it : state.at("items")) {
      push(it.at(0).get<std::int64_t>(), it.at(1).get<bool>());
    }
    for (const auto& p : state.at("pending")) {
      const auto seq = p.at(0).get<std::uint64_t>();
      pending_[seq] = {p.at(1).get<std::string>(), p.at(2).get<std::string>()};
      by_ref_[p.at(1).get<std::string>()] = seq;
    }
    next_seq_ = state.at("next_seq").get<std::uint64_t>();
  }

 private:
  void remember(const std::string& ref, std::string prediction) {
    if (const auto it = by_ref_.find(ref); it != by_ref_.end()) pending_.erase(it->second);
    const auto seq = next_seq_++;
    pending_[seq] = {ref, std::move(prediction)};
    by_ref_[ref] = seq;
    while (pending_.size() > pending_cap_) {
      by_ref_.erase(pending_.begin()->second.first);
      pending_.erase(pending_.begin());
    }
  }

  void push(std::int64_t ts, bool correct) {
    if (correct) ++correct_;
    window_.push(ts, correct, [this](bool old) {
      if (old) --correct_;
    });
  }

  WindowBuffer<bool> window_;
  std::size_t correct_ = 0;
  std::size_t pending_cap_;
  // seq -> (ref, prediction)
  std::map<std::uint64_t, std::pair<std::string, std::string>> pending_;
  std::unordered_map<std::string, std::uint64_t> by_ref_;
  std::uint64_t next_seq_ = 0;
};

class ConfidenceState final : public EvaluatorState {
 public:
  ConfidenceState(const plan::Evaluator& e, const EngineOptions& o)
      : window_(e.window, o.time_window_cap) {}

  bool accept(const Event& e) override {
    if (e.kind != EventKind::kPrediction || !e.confidence) return false;
    push(e.ts, *e.confidence);
    return true;
  }

  std::size_t size() const override { return window_.size(); }

  std::optional<MetricValue> compute() const override {
    if (window_.size() == 0) return std::nullopt;
    return MetricValue{sum_ / static_cast<double>(window_.size()), window_.size(), {}};
  }

  std::string item_text(std::size_t i) const override {
    return std::to_string(window_[i].first) + " " + format_number(window_[i].second);
  }

  // The running sum is saved as-is so a restored run continues bit-for-bit.
  Json save() const override {
    Json items = Json::array();
    for (const auto& [ts, c] : window_) items.push_back(Json::array({ts, c}));
    return Json{{"items", std::move(items)}, {"sum", sum_}};
  }

  void load(const Json& state) override {
    window_.clear();
    for (const auto& it : state.at("items")) {
      push(it.at(0).get<std::int64_t>(), it.at(1).get<double>());
    }
    sum_ = state.at("sum").get<double>();
  }

 private:
  void push(std::int64_t ts, double c) {
    sum_ += c;
    window_.push(ts, c, [this](double old) { sum_ -= old; });
  }

  WindowBuffer<double> window_;
  double sum_ = 0.0;
};

// --- safety and privacy signals -----------------------------------------------------

/// range_rate and flag_rate: both count "bad" events in the window.
class RateState final : public EvaluatorState {
 public:
  RateState(const plan::Evaluator& e, const EngineOptions& o)
      : field_(field_arg(e)), window_(e.window, o.time_window_cap) {
    if (e.kind() == MetricKind::kRangeRate) range_ = {number_arg(e, 1), number_arg(e, 2)};
  }

  bool accept(const Event& e) override {
    if (!kind_in(e, {EventKind::kPrediction, EventKind::kSignal})) return false;
    const auto* s = signal(e, field_);
    if (s == nullptr) return false;
    bool bad = false;
    if (range_) {
      const auto* x = std::get_if<double>(s);
      if (x == nullptr) return false;
      bad = *x < range_->first || *x > range_->second;
    } else if (const auto* b = std::get_if<bool>(s)) {
      bad = *b;
    } else {
      bad = std::get<double>(*s) != 0.0;
    }
    push(e.ts, bad);
    return true;
  }

  std::size_t size() const override { return window_.size(); }

  std::optional<MetricValue> compute() const override {
    if (window_.size() == 0) return std::nullopt;
    return MetricValue{static_cast<double>(bad_) / static_cast<double>(window_.size()),
                       window_.size(),
                       {}};
  }

  std::string item_text(std::size_t i) const override {
    return std::to_string(window_[i].first) + (window_[i].second ? " 1" : " 0");
  }

  Json save() const override {
    Json items = Json::array();
    for (const auto& [ts, bad] : window_) items.push_back(Json::array({ts, bad}));
    return Json{{"items", std::move(items)}};
  }

  void load(const Json& state) override {
    window_.clear();
    bad_ = 0;
    for (const auto& it : state.at("items")) {
      push(it.at(0).get<std::int64_t>(), it.at(1).get<bool>());
    }
  }

 private:
  void push(std::int64_t ts, bool bad) {
    if (bad) ++bad_;
    window_.push(ts, bad, [this](bool old) {
      if (old) --bad_;
    });
  }

  std::string field_;
  std::optional<std::pair<double, double>> range_;
  WindowBuffer<bool> window_;
  std::size_t bad_ = 0;
};

}  // namespace

std::unique_ptr<EvaluatorState> make_state(const plan::Evaluator& e, const BaselineSample& b,
                                           const EngineOptions& o) {
  switch (e.kind()) {
    case MetricKind::kDemographicParity:
    case MetricKind::kDisparateImpact:
      return std::make_unique<FairnessState>(e, o);
    case MetricKind::kKsDrift:
      return std::make_unique<KsState>(e, b, o);
    case MetricKind::kPsiDrift:
      return std::make_unique<PsiState>(e, b, o);
    case MetricKind::kPredictionDrift:
      return std::make_unique<JsdState>(e, b, o);
    case MetricKind::kAccuracy:
      return std::make_unique<AccuracyState>(e, o);
    case MetricKind::kMeanConfidence:
      return std::make_unique<ConfidenceState>(e, o);
    case MetricKind::kRangeRate:
    case MetricKind::kFlagRate:
      return std::make_unique<RateState>(e, o);
  }
  throw EngineError("unsupported metric " + e.metric.name);
}

}  // namespace hcmon::engine
