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


#include "hcmon/dsml/syntax.hpp"

#include <cctype>
#include <charconv>
#include <stdexcept>

#include <fmt/format.h>

namespace hcmon::dsml::syntax {
namespace {

enum class Tok {
  kIdent,
  kNumber,
  kString,
  kLBrace,
  kRBrace,
  kSemi,
  kColon,
  kComma,
  kLParen,
  kRParen,
  kCmp,
  kEnd,
};

struct Token {
  Tok kind = Tok::kEnd;
  std::string text;
  double number = 0;
  Location location;
};

std::string_view describe(const Token& t) {
  switch (t.kind) {
    case Tok::kIdent:
      return "identifier";
    case Tok::kNumber:
      return "number";
    case Tok::kString:
      return "string";
    case Tok::kLBrace:
      return "'{'";
    case Tok::kRBrace:
      return "'}'";
    case Tok::kSemi:
      return "';'";
    case Tok::kColon:
      return "':'";
    case Tok::kComma:
      return "','";
    case Tok::kLParen:
      return "'('";
    case Tok::kRParen:
      return "')'";
    case Tok::kCmp:
      return "comparator";
    case Tok::kEnd:
      return "end of input";
  }
  return "token";
}

struct SyntaxError {
  Diagnostic diagnostic;
};

[[noreturn]] void fail(std::string code, std::string message, Location at) {
  throw SyntaxError{make_error(std::move(code), std::move(message), at)};
}

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  Token next() {
    skip_trivia();
    Token t;
    t.location = {line_, column_};
    if (pos_ >= text_.size()) return t;

    const char c = text_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                                     text_[pos_] == '_' || text_[pos_] == '.')) {
        advance();
      }
      t.kind = Tok::kIdent;
      t.text = std::string(text_.substr(start, pos_ - start));
      return t;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '-' && pos_ + 1 < text_.size() &&
         (std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])) || text_[pos_ + 1] == '.'))) {
      return lex_number(t);
    }
    if (c == '"') return lex_string(t);

    switch (c) {
      case '{':
        return single(t, Tok::kLBrace);
      case '}':
        return single(t, Tok::kRBrace);
      case ';':
        return single(t, Tok::kSemi);
      case ':':
        return single(t, Tok::kColon);
      case ',':
        return single(t, Tok::kComma);
      case '(':
        return single(t, Tok::kLParen);
      case ')':
        return single(t, Tok::kRParen);
      case '<':
      case '>':
        t.kind = Tok::kCmp;
        t.text = std::string(1, c);
        advance();
        if (pos_ < text_.size() && text_[pos_] == '=') {
          t.text += '=';
          advance();
        }
        return t;
      case '=':
      case '!':
        if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '=') {
          t.kind = Tok::kCmp;
          t.text = std::string(1, c) + "=";
          advance();
          advance();
          return t;
        }
        break;
      default:
        break;
    }
    fail("syntax-error", fmt::format("unexpected character '{}'", c), t.location);
  }

 private:
  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  void skip_trivia() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else if (c == '/' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '/') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else {
        return;
      }
    }
  }

  Token single(Token& t, Tok kind) {
    t.kind = kind;
    t.text = std::string(1, text_[pos_]);
    advance();
    return t;
  }

  Token lex_number(Token& t) {
    const std::size_t start = pos_;
    if (text_[pos_] == '-') advance();
    auto digits = [&] {
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        advance();
      }
    };
    digits();
    if (pos_ < text_.size() && text_[pos_] == '.') {
      advance();
      digits();
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      const std::size_t save_pos = pos_;
      const int save_col = column_;
      advance();
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) advance();
      if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        digits();
      } else {
        // Not an exponent; the 'e' starts a unit or identifier.
        pos_ = save_pos;
        column_ = save_col;
      }
    }
    const std::string_view lexeme = text_.substr(start, pos_ - start);
    double value = 0;
    const auto [ptr, ec] = std::from_chars(lexeme.data(), lexeme.data() + lexeme.size(), value);
    if (ec != std::errc() || ptr != lexeme.data() + lexeme.size()) {
      fail("syntax-error", fmt::format("malformed number '{}'", lexeme), t.location);
    }
    t.kind = Tok::kNumber;
    t.text = std::string(lexeme);
    t.number = value;
    return t;
  }

  Token lex_string(Token& t) {
    advance();  // opening quote
    std::string body;
    while (true) {
      if (pos_ >= text_.size() || text_[pos_] == '\n') {
        fail("syntax-error", "unterminated string", t.location);
      }
      const char c = text_[pos_];
      if (c == '"') {
        advance();
        break;
      }
      if (c == '\\') {
        advance();
        if (pos_ >= text_.size()) fail("syntax-error", "unterminated string", t.location);
        const char e = text_[pos_];
        switch (e) {
          case 'n':
            body += '\n';
            break;
          case 't':
            body += '\t';
            break;
          case '"':
          case '\\':
            body += e;
            break;
          default:
            fail("syntax-error", fmt::format("unknown escape '\\{}'", e), {line_, column_});
        }
        advance();
        continue;
      }
      body += c;
      advance();
    }
    t.kind = Tok::kString;
    t.text = std::move(body);
    return t;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int column_ = 1;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : lexer_(text) {
    current_ = lexer_.next();
    lookahead_ = lexer_.next();
  }

  Document parse() {
    Document doc;
    expect_word("model");
    const Token kind = expect(Tok::kIdent, "model kind");
    doc.kind = kind.text;
    doc.kind_location = kind.location;
    doc.name = expect(Tok::kIdent, "model name").text;
    expect(Tok::kSemi, "';' after model header");
    while (current_.kind != Tok::kEnd) doc.declarations.push_back(parse_block());
    return doc;
  }

 private:
  Token take() {
    Token t = std::move(current_);
    current_ = std::move(lookahead_);
    lookahead_ = lexer_.next();
    return t;
  }

  Token expect(Tok kind, std::string_view what) {
    if (current_.kind != kind) {
      fail("syntax-error", fmt::format("expected {}, found {}", what, describe(current_)),
           current_.location);
    }
    return take();
  }

  void expect_word(std::string_view word) {
    if (current_.kind != Tok::kIdent || current_.text != word) {
      fail("syntax-error", fmt::format("expected '{}'", word), current_.location);
    }
    take();
  }

  Block parse_block() {
    Block block;
    block.location = current_.location;
    block.keyword = expect(Tok::kIdent, "declaration keyword").text;
    block.id = expect(Tok::kIdent, fmt::format("identifier after '{}'", block.keyword)).text;
    if (current_.kind == Tok::kSemi) {
      take();
      return block;
    }
    expect(Tok::kLBrace, "'{' or ';'");
    block.has_body = true;
    while (current_.kind != Tok::kRBrace) {
      if (current_.kind == Tok::kEnd) {
        fail("syntax-error", fmt::format("unclosed block '{}'", block.id), current_.location);
      }
      if (current_.kind == Tok::kIdent && lookahead_.kind == Tok::kColon) {
        block.properties.push_back(parse_property());
      } else {
        block.children.push_back(parse_block());
      }
    }
    take();
    return block;
  }

  Property parse_property() {
    Property p;
    p.location = current_.location;
    p.key = take().text;
    take();  // ':'
    p.values.push_back(parse_value(p.key));
    while (current_.kind == Tok::kComma) {
      take();
      p.values.push_back(parse_value(p.key));
    }
    expect(Tok::kSemi, fmt::format("';' after property '{}'", p.key));
    return p;
  }

  Value parse_value(std::string_view key) {
    Value v;
    v.location = current_.location;
    switch (current_.kind) {
      case Tok::kString:
        v.type = Value::Type::kString;
        v.text = take().text;
        return v;
      case Tok::kNumber: {
        v.number = take().number;
        v.type = Value::Type::kNumber;
        if (current_.kind == Tok::kIdent && is_unit(current_.text)) {
          v.type = Value::Type::kQuantity;
          v.unit = take().text;
        }
        return v;
      }
      case Tok::kCmp: {
        const Token cmp = take();
        if (current_.kind != Tok::kNumber) {
          fail("malformed-threshold",
               fmt::format("malformed threshold: comparator '{}' must be followed by a number",
                           cmp.text),
               cmp.location);
        }
        v.type = Value::Type::kComparison;
        v.text = cmp.text;
        v.number = take().number;
        return v;
      }
      case Tok::kIdent: {
        v.text = take().text;
        if (current_.kind != Tok::kLParen) {
          v.type = Value::Type::kIdent;
          return v;
        }
        take();
        v.type = Value::Type::kCall;
        v.args.push_back(parse_value(key));
        while (current_.kind == Tok::kComma) {
          take();
          v.args.push_back(parse_value(key));
        }
        expect(Tok::kRParen, "')'");
        return v;
      }
      default:
        break;
    }
    if (key == "threshold") {
      fail("malformed-threshold", "malformed threshold: expected comparator and number",
           current_.location);
    }
    fail("syntax-error", fmt::format("expected value for '{}', found {}", key, describe(current_)),
         current_.location);
  }

  Lexer lexer_;
  Token current_;
  Token lookahead_;
};

}  // namespace

ParseOutput parse_document(std::string_view text) {
  ParseOutput out;
  try {
    Parser parser(text);
    out.document = parser.parse();
  } catch (const SyntaxError& e) {
    out.diagnostics.push_back(e.diagnostic);
  }
  return out;
}

bool is_unit(std::string_view word) {
  return word == "s" || word == "m" || word == "h" || word == "ev";
}

bool is_identifier(std::string_view word) {
  if (word.empty()) return false;
  const auto first = static_cast<unsigned char>(word.front());
  if (!std::isalpha(first) && word.front() != '_') return false;
  for (char c : word) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '.') return false;
  }
  return true;
}

std::string format_number(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf, ptr);
}

std::string quote_string(std::string_view text) {
  std::string out = "\"";
  for (char c : text) {
    switch (c) {
      case '"':
        out += "\\\"";
        break;
      case '\\':
        out += "\\\\";
        break;
      case '\n':
        out += "\\n";
        break;
      case '\t':
        out += "\\t";
        break;
      default:
        out += c;
    }
  }
  out += '"';
  return out;
}

}  // namespace hcmon::dsml::syntax
