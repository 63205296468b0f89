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

#include <atomic>
#include <cstdint>
#include <functional>
#include <istream>
#include <memory>
#include <ostream>
#include <string>
#include <string_view>

#include "hcmon/adapt.hpp"
#include "hcmon/engine.hpp"

namespace hcmon::runtime {

/// Output streams for one run; a null pointer discards that stream.
struct Sinks {
  std::ostream* violations = nullptr;  // ViolationRecord JSON lines
  std::ostream* alerts = nullptr;      // AlertRecord JSON lines
  std::ostream* audit = nullptr;       // `ts action target outcome`
  std::ostream* results = nullptr;     // MetricResult JSON lines
  std::ostream* log = nullptr;         // `SEVERITY ts message`
};

struct RunSummary {
  std::uint64_t events = 0;
  std::uint64_t routed = 0;
  std::uint64_t dropped = 0;
  std::uint64_t malformed = 0;
  std::uint64_t results = 0;
  std::uint64_t violations = 0;
  std::uint64_t adaptations = 0;
  std::uint64_t alerts = 0;

  bool operator==(const RunSummary&) const = default;
};

engine::Json to_json(const RunSummary& summary);

/// Engine plus MAPE-K loop wired to sinks: every violation is classified and
/// acted on before it is written, and shutdowns flow back into routing.
class Monitor {
 public:
  Monitor(engine::Engine& engine, adapt::MapeLoop& mape, Sinks sinks)
      : engine_(engine), mape_(mape), sinks_(sinks) {}

  void feed_line(std::string_view line);
  void feed(const engine::Event& event);

  /// Called for each violation after it has been handled.
  std::function<void(const engine::ViolationRecord&)> on_violation;

  RunSummary summary() const;
  void flush();

  /// Engine and MAPE-K state in one document.
  engine::Json snapshot() const;
  void restore(const engine::Json& document);

 private:
  void consume(engine::StepOutput out);

  engine::Engine& engine_;
  adapt::MapeLoop& mape_;
  Sinks sinks_;
  std::uint64_t results_ = 0;
  std::uint64_t violations_ = 0;
  std::uint64_t adaptations_ = 0;
  std::uint64_t alerts_ = 0;
};

/// Newline-delimited input. `next` returns false at end of stream.
class LineSource {
 public:
  virtual ~LineSource() = default;
  virtual bool next(std::string& line) = 0;
};

class StreamSource final : public LineSource {
 public:
  explicit StreamSource(std::istream& in) : in_(in) {}
  bool next(std::string& line) override;

 private:
  std::istream& in_;
};

/// Accepts TCP connections on host:port, one at a time; each connection is a
/// stream segment ending when the peer closes it. Stops after
/// `max_segments` connections (0 = unlimited) or when `stop` is set.
class TcpSource final : public LineSource {
 public:
  TcpSource(const std::string& host, std::uint16_t port, std::size_t max_segments,
            const std::atomic<bool>* stop);
  ~TcpSource() override;
  TcpSource(const TcpSource&) = delete;
  TcpSource& operator=(const TcpSource&) = delete;

  bool next(std::string& line) override;
  /// Port actually bound (useful when asked for port 0).
  std::uint16_t port() const { return port_; }

 private:
  bool fill();

  int listen_fd_ = -1;
  int conn_fd_ = -1;
  std::uint16_t port_ = 0;
  std::size_t max_segments_;
  std::size_t segments_ = 0;
  const std::atomic<bool>* stop_;
  std::string buffer_;
};

/// Feeds every line from `source` until it ends or `stop` is set.
RunSummary run_stream(Monitor& monitor, LineSource& source,
                      const std::atomic<bool>* stop = nullptr);

}  // namespace hcmon::runtime
