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
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include "hcmon/engine.hpp"

namespace hcmon::engine {

/// Window plus incremental accumulator for one evaluator. `accept` reports
/// whether the window changed; only then is the evaluator re-run.
class EvaluatorState {
 public:
  virtual ~EvaluatorState() = default;

  virtual bool accept(const Event& event) = 0;
  /// Items currently in the window.
  virtual std::size_t size() const = 0;
  /// Empty while warming up; throws metrics::MetricError on evaluator failure.
  virtual std::optional<metrics::MetricValue> compute() const = 0;
  /// One line of text per window item, fed to the sample digest.
  virtual std::string item_text(std::size_t i) const = 0;

  virtual Json save() const = 0;
  virtual void load(const Json& state) = 0;

  /// Window items plus anything else retained (pending predictions).
  virtual std::size_t buffered() const { return size(); }
};

std::unique_ptr<EvaluatorState> make_state(const plan::Evaluator& evaluator,
                                           const BaselineSample& baseline,
                                           const EngineOptions& options);

/// Count- or time-bounded FIFO of timestamped items.
template <class T>
class WindowBuffer {
 public:
  WindowBuffer(dsml::Window window, std::size_t time_cap) : window_(window), time_cap_(time_cap) {}

  template <class OnEvict>
  void push(std::int64_t ts, T item, OnEvict&& on_evict) {
    items_.emplace_back(ts, std::move(item));
    if (window_.mode == dsml::WindowMode::kCount) {
      while (items_.size() > window_.size) evict(on_evict);
      return;
    }
    const std::int64_t horizon = ts - static_cast<std::int64_t>(window_.size) * 1000;
    while (!items_.empty() && items_.front().first <= horizon) evict(on_evict);
    while (items_.size() > time_cap_) evict(on_evict);
  }

  std::size_t size() const { return items_.size(); }
  const std::pair<std::int64_t, T>& operator[](std::size_t i) const { return items_[i]; }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }
  void clear() { items_.clear(); }

 private:
  template <class OnEvict>
  void evict(OnEvict& on_evict) {
    on_evict(items_.front().second);
    items_.pop_front();
  }

  dsml::Window window_;
  std::size_t time_cap_;
  std::deque<std::pair<std::int64_t, T>> items_;
};

}  // namespace hcmon::engine
