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

#include <compare>
#include <span>
#include <string>
#include <vector>

namespace hcmon {

struct Location {
  int line = 1;
  int column = 1;

  auto operator<=>(const Location&) const = default;
};

enum class Severity { kError, kWarning, kInfo };

std::string_view to_string(Severity severity);

/// One finding produced while parsing, validating, weaving, compiling or
/// loading a plan. `file` is filled in by whoever knows the path.
struct Diagnostic {
  Severity severity = Severity::kError;
  std::string code;
  std::string message;
  Location location;
  std::string file;

  bool operator==(const Diagnostic&) const = default;
};

Diagnostic make_error(std::string code, std::string message, Location at);
Diagnostic make_warning(std::string code, std::string message, Location at);

/// `SEVERITY CODE file:line:col message`
std::string format_diagnostic(const Diagnostic& diagnostic);

bool has_errors(std::span<const Diagnostic> diagnostics);

}  // namespace hcmon
