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


#include "hcmon/cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

#include "hcmon/adapt.hpp"
#include "hcmon/dsml/model.hpp"
#include "hcmon/dsml/syntax.hpp"
#include "hcmon/engine.hpp"
#include "hcmon/harness.hpp"
#include "hcmon/io.hpp"
#include "hcmon/plan.hpp"
#include "hcmon/runner.hpp"
#include "hcmon/weaver.hpp"

namespace hcmon::cli {

namespace fs = std::filesystem;

std::atomic<bool>& stop_flag() {
  static std::atomic<bool> flag{false};
  return flag;
}

namespace {

/// A failure that maps straight to an exit status; the message goes to stderr.
struct Failure {
  int status;
  std::string message;
};

void print(std::ostream& os, std::vector<Diagnostic> diagnostics) {
  for (const auto& d : diagnostics) os << format_diagnostic(d) << '\n';
}

std::string read_or_fail(const std::string& path) {
  try {
    return io::read_file(path);
  } catch (const io::IoError& e) {
    throw Failure{kModelError, e.what()};
  }
}

// --- models ----------------------------------------------------------------

struct Loaded {
  std::vector<weaver::SourceFile> files;
  std::vector<Diagnostic> diagnostics;
};

/// Parses and validates each model file; scenario files are checked too.
Loaded load_models(const std::vector<std::string>& paths, bool allow_scenarios) {
  Loaded out;
  for (const auto& path : paths) {
    std::string text;
    try {
      text = io::read_file(path);
    } catch (const io::IoError& e) {
      auto d = make_error("io-error", e.what(), Location{});
      d.file = path;
      out.diagnostics.push_back(std::move(d));
      continue;
    }
    std::vector<Diagnostic> found;
    const auto header = dsml::syntax::parse_document(text);
    if (allow_scenarios && header.document && header.document->kind == "scenario") {
      found = harness::parse_scenario(text).diagnostics;
    } else {
      auto parsed = dsml::parse_model(text);
      found = std::move(parsed.diagnostics);
      if (parsed.model) {
        auto checks = dsml::validate_model(*parsed.model);
        found.insert(found.end(), checks.begin(), checks.end());
        out.files.push_back({path, std::move(*parsed.model)});
      }
    }
    for (auto& d : found) d.file = path;
    out.diagnostics.insert(out.diagnostics.end(), found.begin(), found.end());
  }
  return out;
}

/// Loads, validates and weaves five model files; diagnostics go to `err`.
weaver::WovenModel weave_or_fail(const std::vector<std::string>& paths, std::ostream& err) {
  auto loaded = load_models(paths, false);
  print(err, loaded.diagnostics);
  if (has_errors(loaded.diagnostics)) throw Failure{kModelError, ""};
  weaver::WovenModel woven;
  try {
    woven = weaver::weave(std::move(loaded.files));
  } catch (const weaver::WeaveError& e) {
    throw Failure{kModelError, e.what()};
  }
  print(err, woven.diagnostics);
  if (!woven.compilable()) throw Failure{kModelError, ""};
  return woven;
}

// --- plans -----------------------------------------------------------------

plan::MonitorSpec load_plan_or_fail(const std::string& path, std::ostream& err) {
  auto loaded = plan::load_plan(read_or_fail(path));
  for (auto& d : loaded.diagnostics) d.file = path;
  print(err, loaded.diagnostics);
  if (!loaded.ok()) throw Failure{kModelError, ""};
  return std::move(*loaded.spec);
}

/// Baseline paths in a plan are relative to the plan file.
engine::Engine::FileReader plan_reader(const std::string& plan_path) {
  const auto dir = fs::path(plan_path).parent_path();
  return [dir](const std::string& path) {
    const fs::path p(path);
    return io::read_file((p.is_absolute() ? p : dir / p).string());
  };
}

engine::Engine make_engine(plan::MonitorSpec spec, const std::string& plan_path,
                           int hysteresis) {
  engine::EngineOptions options;
  options.hysteresis = hysteresis;
  try {
    return engine::Engine(std::move(spec), plan_reader(plan_path), options);
  } catch (const std::exception& e) {
    throw Failure{kModelError, e.what()};
  }
}

// --- scenarios -------------------------------------------------------------

struct ScenarioArgs {
  std::string scenario;
  std::vector<std::string> mutation_files;
  std::vector<std::string> mutate;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> steps;
};

void add_scenario_options(CLI::App& cmd, ScenarioArgs& a) {
  cmd.add_option("--scenario", a.scenario, "scenario model file")->required();
  cmd.add_option("--mutations", a.mutation_files, "file of mutation blocks (repeatable)");
  cmd.add_option("--mutate", a.mutate, "inline mutation, e.g. bias(B,0.5)@10000 (repeatable)");
  cmd.add_option("--seed", a.seed, "override the scenario seed");
  cmd.add_option("--steps", a.steps, "override the number of simulation steps");
}

std::pair<harness::ScenarioConfig, std::vector<harness::Mutation>> scenario_or_fail(
    const ScenarioArgs& a, std::ostream& err) {
  auto parsed = harness::parse_scenario(read_or_fail(a.scenario));
  std::vector<Diagnostic> diagnostics = parsed.diagnostics;
  for (auto& d : diagnostics) d.file = a.scenario;
  auto mutations = std::move(parsed.mutations);
  for (const auto& path : a.mutation_files) {
    auto extra = harness::parse_scenario(read_or_fail(path), true);
    for (auto& d : extra.diagnostics) d.file = path;
    diagnostics.insert(diagnostics.end(), extra.diagnostics.begin(), extra.diagnostics.end());
    mutations.insert(mutations.end(), extra.mutations.begin(), extra.mutations.end());
  }
  print(err, diagnostics);
  if (has_errors(diagnostics) || !parsed.config) throw Failure{kModelError, ""};
  for (const auto& text : a.mutate) {
    std::string why;
    auto m = harness::parse_mutation_text(text, why);
    if (!m) throw Failure{kUsage, fmt::format("--mutate {}: {}", text, why)};
    mutations.push_back(std::move(*m));
  }
  auto config = std::move(*parsed.config);
  if (a.seed) config.seed = *a.seed;
  if (a.steps) config.n_events = *a.steps;
  if (const auto problems = harness::check_config(config, mutations); !problems.empty()) {
    for (const auto& p : problems) {
      err << fmt::format("error invalid-scenario {}: {}\n", a.scenario, p);
    }
    throw Failure{kModelError, ""};
  }
  return {std::move(config), std::move(mutations)};
}

// --- outputs ---------------------------------------------------------------

/// Optional atomically replaced output files, committed together.
class Outputs {
 public:
  std::ostream* open(const std::string& path) {
    if (path.empty()) return nullptr;
    try {
      files_.push_back(std::make_unique<io::AtomicFile>(path));
    } catch (const io::IoError& e) {
      throw Failure{kModelError, e.what()};
    }
    return &files_.back()->stream();
  }
  void commit() {
    try {
      for (auto& f : files_) f->commit();
    } catch (const io::IoError& e) {
      throw Failure{kModelError, e.what()};
    }
  }

 private:
  std::vector<std::unique_ptr<io::AtomicFile>> files_;
};

void write_or_fail(const std::string& path, std::string_view content) {
  try {
    io::write_file_atomic(path, content);
  } catch (const io::IoError& e) {
    throw Failure{kModelError, e.what()};
  }
}

/// Writes to `path`, or to `fallback` when no path was given.
void emit(const std::string& path, std::string_view content, std::ostream& fallback) {
  if (path.empty()) {
    fallback << content;
  } else {
    write_or_fail(path, content);
  }
}

std::pair<std::string, std::uint16_t> split_endpoint(const std::string& endpoint) {
  const auto colon = endpoint.rfind(':');
  if (colon == std::string::npos) throw Failure{kUsage, "--listen expects host:port"};
  try {
    const auto port = std::stoul(endpoint.substr(colon + 1));
    if (port > 65535) throw std::out_of_range("port");
    return {endpoint.substr(0, colon), static_cast<std::uint16_t>(port)};
  } catch (const std::logic_error&) {
    throw Failure{kUsage, "--listen expects host:port"};
  }
}

// --- commands --------------------------------------------------------------

int cmd_validate(const std::vector<std::string>& paths, std::ostream& out) {
  auto loaded = load_models(paths, true);
  print(out, loaded.diagnostics);
  return has_errors(loaded.diagnostics) ? kModelError : kOk;
}

int cmd_weave(const std::vector<std::string>& paths, const std::string& trace_id,
              std::ostream& out, std::ostream& err) {
  const auto woven = weave_or_fail(paths, err);
  if (trace_id.empty()) {
    out << fmt::format("woven {} nodes and {} edges\n", woven.nodes.size(), woven.edges.size());
    return kOk;
  }
  try {
    out << weaver::format_trace(woven, weaver::trace(woven, trace_id));
  } catch (const weaver::WeaveError& e) {
    throw Failure{kModelError, e.what()};
  }
  return kOk;
}

int cmd_compile(const std::vector<std::string>& paths, const std::string& out_path,
                std::ostream& out, std::ostream& err) {
  const auto woven = weave_or_fail(paths, err);
  auto compiled = plan::compile(woven);
  print(err, compiled.diagnostics);
  if (!compiled.ok()) return kModelError;
  auto spec = std::move(*compiled.spec);
  const auto plan_dir = fs::absolute(fs::path(out_path)).parent_path();
  for (auto& e : spec.evaluators) {
    if (!e.baseline || fs::path(e.baseline->path).is_absolute()) continue;
    e.baseline->path =
        fs::absolute(e.baseline->path).lexically_normal().lexically_relative(plan_dir).string();
  }
  write_or_fail(out_path, plan::emit_plan(spec));
  out << fmt::format("wrote {}: {} evaluators, {} rules, {} adaptations\n", out_path,
                     spec.evaluators.size(), spec.rules.size(), spec.adaptation_rules.size());
  return kOk;
}

struct RunArgs {
  std::string plan;
  std::string events;
  std::string listen;
  std::size_t max_connections = 0;
  std::string violations;
  std::string alerts;
  std::string audit;
  std::string results;
  std::string log;
  std::string summary;
  std::string snapshot_in;
  std::string snapshot_out;
  int hysteresis = 3;
};

int cmd_run(const RunArgs& a, std::ostream& out, std::ostream& err) {
  if (a.events.empty() == a.listen.empty()) {
    throw Failure{kUsage, "run needs exactly one of --events and --listen"};
  }
  auto engine = make_engine(load_plan_or_fail(a.plan, err), a.plan, a.hysteresis);
  adapt::DryRunHandle handle;
  adapt::MapeLoop mape(engine.spec(), handle);

  Outputs files;
  runtime::Sinks sinks;
  sinks.violations = files.open(a.violations);
  sinks.alerts = files.open(a.alerts);
  sinks.audit = files.open(a.audit);
  sinks.results = files.open(a.results);
  sinks.log = a.log.empty() ? &err : files.open(a.log);
  runtime::Monitor monitor(engine, mape, sinks);
  if (!a.snapshot_in.empty()) {
    try {
      monitor.restore(engine::Json::parse(read_or_fail(a.snapshot_in)));
    } catch (const std::exception& e) {
      throw Failure{kModelError, fmt::format("{}: {}", a.snapshot_in, e.what())};
    }
  }

  runtime::RunSummary summary;
  if (!a.listen.empty()) {
    const auto [host, port] = split_endpoint(a.listen);
    std::unique_ptr<runtime::TcpSource> source;
    try {
      source = std::make_unique<runtime::TcpSource>(host, port, a.max_connections, &stop_flag());
    } catch (const std::runtime_error& e) {
      throw Failure{kModelError, e.what()};
    }
    err << fmt::format("INFO listening on {}:{}\n", host, source->port());
    summary = runtime::run_stream(monitor, *source, &stop_flag());
  } else if (a.events == "-") {
    runtime::StreamSource source(std::cin);
    summary = runtime::run_stream(monitor, source, &stop_flag());
  } else {
    std::ifstream in(a.events, std::ios::binary);
    std::error_code ec;
    if (!in || fs::is_directory(a.events, ec)) {
      throw Failure{kModelError, fmt::format("cannot read {}", a.events)};
    }
    runtime::StreamSource source(in);
    summary = runtime::run_stream(monitor, source, &stop_flag());
  }

  if (!a.snapshot_out.empty()) write_or_fail(a.snapshot_out, monitor.snapshot().dump(2) + "\n");
  files.commit();
  emit(a.summary, runtime::to_json(summary).dump() + "\n", out);
  return summary.violations > 0 ? kViolations : kOk;
}

int cmd_simulate(const ScenarioArgs& s, const std::string& out_path, std::string truth_path,
                 std::ostream& out, std::ostream& err) {
  const auto [config, mutations] = scenario_or_fail(s, err);
  const auto generated = harness::generate(config, mutations);
  std::string text;
  for (const auto& line : generated.lines) text += line + '\n';
  if (truth_path.empty()) truth_path = out_path + ".truth.jsonl";
  write_or_fail(out_path, text);
  write_or_fail(truth_path, harness::format_truth(generated.truth));
  out << fmt::format("wrote {} events over {} steps to {}; ground truth in {}\n",
                     generated.lines.size(), config.n_events, out_path, truth_path);
  return kOk;
}

struct ReportArgs {
  std::uint64_t grace = 4000;
  std::string report;
  std::string report_json;
};

void add_report_options(CLI::App& cmd, ReportArgs& r) {
  cmd.add_option("--grace", r.grace, "steps after a mutation ends that still count")
      ->capture_default_str();
  cmd.add_option("--report", r.report, "report table (default: stdout)");
  cmd.add_option("--report-json", r.report_json, "machine-readable report");
}

struct EvaluateArgs {
  std::string plan;
  ScenarioArgs scenario;
  ReportArgs report;
  std::string violations;
  std::string alerts;
  std::string audit;
  std::string events_out;
  std::string log;
  int hysteresis = 3;
};

/// Closed loop: the simulator feeds the monitor and receives its actions.
int cmd_evaluate(const EvaluateArgs& a, std::ostream& out, std::ostream& err) {
  auto engine = make_engine(load_plan_or_fail(a.plan, err), a.plan, a.hysteresis);
  const auto [config, mutations] = scenario_or_fail(a.scenario, err);
  harness::Simulator sim(config, mutations);
  adapt::MapeLoop mape(engine.spec(), sim);

  Outputs files;
  runtime::Sinks sinks;
  sinks.violations = files.open(a.violations);
  sinks.alerts = files.open(a.alerts);
  sinks.audit = files.open(a.audit);
  sinks.log = files.open(a.log);
  std::ostream* events_out = files.open(a.events_out);
  runtime::Monitor monitor(engine, mape, sinks);
  std::vector<harness::ScoredViolation> seen;
  monitor.on_violation = [&](const engine::ViolationRecord& v) {
    auto s = harness::scored({v});
    seen.insert(seen.end(), s.begin(), s.end());
  };
  while (!sim.done() && !stop_flag().load()) {
    const auto ev = sim.next();
    if (!ev) continue;
    const auto line = engine::serialize_event(*ev);
    if (events_out) *events_out << line << '\n';
    monitor.feed_line(line);
  }
  monitor.flush();
  const auto summary = monitor.summary();
  const auto score = harness::score_detection(seen, sim.truth(), a.report.grace);

  const auto table = fmt::format(
      "scenario {} seed {} steps {} plan {}\n"
      "events {} routed {} dropped {} malformed {} violations {} adaptations {} alerts {}\n\n{}",
      config.name, config.seed, sim.step(), engine.spec().monitor_id, summary.events,
      summary.routed, summary.dropped, summary.malformed, summary.violations,
      summary.adaptations, summary.alerts, harness::format_report(score));
  engine::Json doc{{"scenario", config.name},          {"seed", config.seed},
                   {"steps", sim.step()},               {"plan", engine.spec().monitor_id},
                   {"grace", a.report.grace},           {"summary", runtime::to_json(summary)},
                   {"score", harness::to_json(score)}};
  files.commit();
  emit(a.report.report, table, out);
  if (!a.report.report_json.empty()) write_or_fail(a.report.report_json, doc.dump(2) + "\n");
  return kOk;
}

int cmd_report(const std::string& violations_path, const std::string& truth_path,
               const ReportArgs& r, std::ostream& out) {
  harness::DetectionScore score;
  try {
    score = harness::score_detection(harness::parse_violations(read_or_fail(violations_path)),
                                     harness::parse_truth(read_or_fail(truth_path)), r.grace);
  } catch (const harness::ConfigError& e) {
    throw Failure{kModelError, e.what()};
  }
  emit(r.report, harness::format_report(score), out);
  if (!r.report_json.empty()) {
    const engine::Json doc{{"grace", r.grace}, {"score", harness::to_json(score)}};
    write_or_fail(r.report_json, doc.dump(2) + "\n");
  }
  return kOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"hcmon: compile human-centric requirement models into runtime monitors"};
  app.name("hcmon");
  app.require_subcommand(1);

  std::vector<std::string> model_paths;
  std::string trace_id;
  std::string out_path;
  std::string truth_path;
  std::string violations_path;
  RunArgs run;
  ScenarioArgs simulate;
  EvaluateArgs evaluate;
  ReportArgs report;

  auto* validate_cmd = app.add_subcommand("validate", "parse and check model files");
  validate_cmd->add_option("files", model_paths, "model files")->required();

  auto* weave_cmd = app.add_subcommand("weave", "weave the five models and check references");
  weave_cmd->add_option("files", model_paths, "hcr, tech, arch, design and context models")
      ->required()
      ->expected(5);
  weave_cmd->add_option("--trace", trace_id, "print the trace chain of a requirement");

  auto* compile_cmd = app.add_subcommand("compile", "compile the five models into a plan");
  compile_cmd->add_option("files", model_paths, "hcr, tech, arch, design and context models")
      ->required()
      ->expected(5);
  compile_cmd->add_option("--out", out_path, "plan file to write")->required();

  auto* run_cmd = app.add_subcommand("run", "run a plan over an event stream");
  run_cmd->add_option("--plan", run.plan, "compiled plan")->required();
  run_cmd->add_option("--events", run.events, "event file, or - for stdin");
  run_cmd->add_option("--listen", run.listen, "accept event streams on host:port");
  run_cmd->add_option("--max-connections", run.max_connections,
                      "stop after this many connections (0 = until signalled)");
  run_cmd->add_option("--violations", run.violations, "violation records");
  run_cmd->add_option("--alerts", run.alerts, "alert records");
  run_cmd->add_option("--audit", run.audit, "action audit log");
  run_cmd->add_option("--results", run.results, "every metric result");
  run_cmd->add_option("--log", run.log, "log lines (default: stderr)");
  run_cmd->add_option("--summary", run.summary, "summary record (default: stdout)");
  run_cmd->add_option("--snapshot-in", run.snapshot_in, "resume from a snapshot");
  run_cmd->add_option("--snapshot-out", run.snapshot_out, "write a snapshot at the end");
  run_cmd->add_option("--hysteresis", run.hysteresis, "consecutive breaches before a violation")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  auto* simulate_cmd = app.add_subcommand("simulate", "generate an event stream");
  add_scenario_options(*simulate_cmd, simulate);
  simulate_cmd->add_option("--out", out_path, "event file to write")->required();
  simulate_cmd->add_option("--truth", truth_path, "ground truth file (default: <out>.truth.jsonl)");

  auto* evaluate_cmd = app.add_subcommand("evaluate", "simulate, monitor, adapt and score");
  evaluate_cmd->add_option("--plan", evaluate.plan, "compiled plan")->required();
  add_scenario_options(*evaluate_cmd, evaluate.scenario);
  add_report_options(*evaluate_cmd, evaluate.report);
  evaluate_cmd->add_option("--violations", evaluate.violations, "violation records");
  evaluate_cmd->add_option("--alerts", evaluate.alerts, "alert records");
  evaluate_cmd->add_option("--audit", evaluate.audit, "action audit log");
  evaluate_cmd->add_option("--events-out", evaluate.events_out, "generated events");
  evaluate_cmd->add_option("--log", evaluate.log, "log lines");
  evaluate_cmd->add_option("--hysteresis", evaluate.hysteresis,
                           "consecutive breaches before a violation")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  auto* report_cmd = app.add_subcommand("report", "score a violation log against ground truth");
  report_cmd->add_option("--violations", violations_path, "violation records")->required();
  report_cmd->add_option("--truth", truth_path, "ground truth file")->required();
  add_report_options(*report_cmd, report);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  try {
    if (*validate_cmd) return cmd_validate(model_paths, out);
    if (*weave_cmd) return cmd_weave(model_paths, trace_id, out, err);
    if (*compile_cmd) return cmd_compile(model_paths, out_path, out, err);
    if (*run_cmd) return cmd_run(run, out, err);
    if (*simulate_cmd) return cmd_simulate(simulate, out_path, truth_path, out, err);
    if (*evaluate_cmd) return cmd_evaluate(evaluate, out, err);
    if (*report_cmd) return cmd_report(violations_path, truth_path, report, out);
  } catch (const Failure& f) {
    if (!f.message.empty()) err << "error: " << f.message << '\n';
    return f.status;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kModelError;
  }
  return kUsage;
}

}  // namespace hcmon::cli
