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

#include <gtest/gtest.h>

#include <string>
#include <vector>

#include "hcmon/io.hpp"
#include "hcmon/plan.hpp"
#include "hcmon/weaver.hpp"

namespace fixture {

inline std::string path(const std::string& relative) {
  return std::string(HCMON_SOURCE_DIR) + "/" + relative;
}

inline hcmon::weaver::SourceFile source(const std::string& file, const std::string& text) {
  auto r = hcmon::dsml::parse_model(text);
  EXPECT_TRUE(r.ok()) << file;
  return {file, r.ok() ? *r.model : hcmon::dsml::SourceModel{}};
}

/// The five models of a case study directory under models/.
inline std::vector<hcmon::weaver::SourceFile> models(const std::string& dir) {
  std::vector<hcmon::weaver::SourceFile> out;
  for (const char* name : {"requirements", "technical", "architecture", "design", "context"}) {
    const auto file = path("models/" + dir + "/" + name + ".hcm");
    out.push_back(source(file, hcmon::io::read_file(file)));
  }
  return out;
}

inline hcmon::plan::MonitorSpec compile(const std::string& dir) {
  auto r = hcmon::plan::compile(hcmon::weaver::weave(models(dir)));
  if (!r.ok()) throw std::runtime_error("fixture " + dir + " does not compile");
  return *r.spec;
}

}  // namespace fixture
