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

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hcmon/diagnostic.hpp"

/// Untyped block syntax shared by every `.hcm` file kind:
///
///   file     := "model" KIND IDENT ";" decl*
///   decl     := KEYWORD IDENT ( "{" entry* "}" | ";" )
///   entry    := decl | property
///   property := KEY ":" value ("," value)* ";"
///   value    := STRING | NUMBER | IDENT | CMP NUMBER | NUMBER UNIT
///             | IDENT "(" value ("," value)* ")"
namespace hcmon::dsml::syntax {

struct Value {
  enum class Type { kString, kNumber, kIdent, kComparison, kQuantity, kCall };

  Type type = Type::kIdent;
  std::string text;   // string body, identifier, comparator, call name
  double number = 0;  // number, comparison bound or quantity magnitude
  std::string unit;   // quantity unit
  std::vector<Value> args;
  Location location;
};

struct Property {
  std::string key;
  std::vector<Value> values;
  Location location;
};

struct Block {
  std::string keyword;
  std::string id;
  Location location;
  bool has_body = false;
  std::vector<Property> properties;
  std::vector<Block> children;
};

struct Document {
  std::string kind;
  Location kind_location;
  std::string name;
  std::vector<Block> declarations;
};

struct ParseOutput {
  std::optional<Document> document;
  std::vector<Diagnostic> diagnostics;
};

/// Stops at the first syntax error; on failure `document` is empty and at
/// least one located diagnostic is returned.
ParseOutput parse_document(std::string_view text);

bool is_unit(std::string_view word);
bool is_identifier(std::string_view word);

/// Shortest decimal text that parses back to the same double.
std::string format_number(double value);
std::string quote_string(std::string_view text);

}  // namespace hcmon::dsml::syntax
