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
#include <ostream>
#include <string>
#include <vector>

/// The `hcmon` command line, callable in-process.
namespace hcmon::cli {

enum ExitStatus : int {
  kOk = 0,           // success, no violations
  kUsage = 1,        // bad flags or arguments
  kModelError = 2,   // model, plan, scenario or I/O error
  kViolations = 3,   // run completed with violations
};

/// Raised by the signal handler; `run` and `evaluate` stop, flush and
/// report when it is set.
std::atomic<bool>& stop_flag();

/// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hcmon::cli
