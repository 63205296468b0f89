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


#include "hcmon/diagnostic.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace hcmon {

std::string_view to_string(Severity severity) {
  switch (severity) {
    case Severity::kError:
      return "error";
    case Severity::kWarning:
      return "warning";
    case Severity::kInfo:
      return "info";
  }
  return "error";
}

Diagnostic make_error(std::string code, std::string message, Location at) {
  return Diagnostic{Severity::kError, std::move(code), std::move(message), at, {}};
}

Diagnostic make_warning(std::string code, std::string message, Location at) {
  return Diagnostic{Severity::kWarning, std::move(code), std::move(message), at, {}};
}

std::string format_diagnostic(const Diagnostic& d) {
  const std::string_view file = d.file.empty() ? std::string_view("<input>") : d.file;
  return fmt::format("{} {} {}:{}:{} {}", to_string(d.severity), d.code, file,
                     d.location.line, d.location.column, d.message);
}

bool has_errors(std::span<const Diagnostic> diagnostics) {
  return std::any_of(diagnostics.begin(), diagnostics.end(),
                     [](const Diagnostic& d) { return d.severity == Severity::kError; });
}

}  // namespace hcmon
