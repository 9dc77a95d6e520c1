#pragma once

#include <cctype>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "levypass/common.hpp"
#include "levypass/process.hpp"

namespace levypass {

// Key/value config with nested blocks:
//
//   label = "example"
//   drift = 1.0
//   measure {
//     kind = gamma_mixture
//     component { rho = 1.0  beta = 1.0  m = 0 }
//   }
//
// Parse errors report the line and field.

struct ConfigEntry {
  std::string key;
  std::vector<std::string> values;
  int line = 0;
};

struct ConfigNode {
  std::string name;
  int line = 0;
  std::vector<ConfigEntry> entries;
  std::vector<ConfigNode> children;

  const ConfigEntry* find(const std::string& key) const {
    for (const auto& e : entries)
      if (e.key == key) return &e;
    return nullptr;
  }

  double number(const std::string& key) const {
    const auto* e = find(key);
    if (!e) throw ConfigError(line, key, "missing required field");
    if (e->values.size() != 1)
      throw ConfigError(e->line, key, "expected a single numeric value");
    try {
      std::size_t used = 0;
      const double v = std::stod(e->values[0], &used);
      if (used != e->values[0].size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw ConfigError(e->line, key, "not a number: '" + e->values[0] + "'");
    }
  }

  double number_or(const std::string& key, double fallback) const {
    return find(key) ? number(key) : fallback;
  }

  std::string text(const std::string& key, const std::string& fallback = "") const {
    const auto* e = find(key);
    if (!e) return fallback;
    std::string joined;
    for (const auto& v : e->values) {
      if (!joined.empty()) joined += ' ';
      joined += v;
    }
    return joined;
  }
};

namespace detail {

struct Token {
  enum Kind { Ident, Equals, Open, Close, End } kind;
  std::string value;
  int line;
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  Token next() {
    if (!buffered_.empty()) {
      Token t = buffered_.back();
      buffered_.pop_back();
      return t;
    }
    return scan();
  }

  void push_back(Token t) { buffered_.push_back(std::move(t)); }

 private:
  Token scan() {
    for (;;) {
      while (pos_ < text_.size() && is_space(text_[pos_])) advance();
      if (pos_ < text_.size() && text_[pos_] == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
        continue;
      }
      break;
    }
    if (pos_ >= text_.size()) return {Token::End, "", line_};
    const char c = text_[pos_];
    if (c == '=') { ++pos_; return {Token::Equals, "=", line_}; }
    if (c == '{') { ++pos_; return {Token::Open, "{", line_}; }
    if (c == '}') { ++pos_; return {Token::Close, "}", line_}; }
    if (c == '"') {
      ++pos_;
      std::string s;
      while (pos_ < text_.size() && text_[pos_] != '"') {
        if (text_[pos_] == '\n') throw ConfigError(line_, "", "unterminated string");
        s += text_[pos_++];
      }
      if (pos_ >= text_.size()) throw ConfigError(line_, "", "unterminated string");
      ++pos_;
      return {Token::Ident, s, line_};
    }
    std::string s;
    while (pos_ < text_.size() && !is_space(text_[pos_]) &&
           text_[pos_] != '=' && text_[pos_] != '{' && text_[pos_] != '}' &&
           text_[pos_] != '#')
      s += text_[pos_++];
    return {Token::Ident, s, line_};
  }

  static bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n';
  }
  void advance() {
    if (text_[pos_] == '\n') ++line_;
    ++pos_;
  }
  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  std::vector<Token> buffered_;
};

inline void parse_block(Lexer& lex, ConfigNode& node, bool top_level) {
  for (;;) {
    Token tok = lex.next();
    if (tok.kind == Token::End) {
      if (!top_level)
        throw ConfigError(tok.line, node.name, "missing closing brace");
      return;
    }
    if (tok.kind == Token::Close) {
      if (top_level) throw ConfigError(tok.line, "", "unmatched closing brace");
      return;
    }
    if (tok.kind != Token::Ident)
      throw ConfigError(tok.line, tok.value, "expected a field or block name");
    Token follow = lex.next();
    if (follow.kind == Token::Open) {
      ConfigNode child;
      child.name = tok.value;
      child.line = tok.line;
      parse_block(lex, child, false);
      node.children.push_back(std::move(child));
    } else if (follow.kind == Token::Equals) {
      ConfigEntry entry;
      entry.key = tok.value;
      entry.line = tok.line;
      for (;;) {  // values run to the end of the line or the next key/block
        Token val = lex.next();
        if (val.kind != Token::Ident || val.line != tok.line) {
          lex.push_back(val);
          break;
        }
        Token peek = lex.next();
        lex.push_back(peek);
        if ((peek.kind == Token::Equals || peek.kind == Token::Open) &&
            peek.line == val.line) {
          lex.push_back(val);  // val is the next field or block name
          break;
        }
        entry.values.push_back(val.value);
      }
      if (entry.values.empty())
        throw ConfigError(tok.line, tok.value, "missing value after '='");
      node.entries.push_back(std::move(entry));
    } else {
      throw ConfigError(tok.line, tok.value, "expected '=' or '{'");
    }
  }
}

}  // namespace detail

inline ConfigNode parse_config(std::string_view text);

inline JumpMeasure measure_from_node(const ConfigNode& node) {
  const std::string kind = node.text("kind");
  if (kind.empty())
    throw ConfigError(node.line, "kind", "measure block needs a kind");
  try {
    if (kind == "none") return JumpMeasure::none();
    if (kind == "gamma_mixture") {
      GammaMixture gm;
      for (const auto& c : node.children) {
        if (c.name != "component")
          throw ConfigError(c.line, c.name, "expected 'component' blocks");
        gm.components.push_back({c.number("rho"), c.number("beta"),
                                 static_cast<int>(c.number("m"))});
      }
      if (gm.components.empty())
        throw ConfigError(node.line, "component", "gamma_mixture needs components");
      return JumpMeasure(gm);
    }
    if (kind == "atoms") {
      Atoms at;
      for (const auto& c : node.children) {
        if (c.name != "atom")
          throw ConfigError(c.line, c.name, "expected 'atom' blocks");
        at.atoms.push_back({c.number("y"), c.number("mass")});
      }
      return JumpMeasure(at);
    }
    if (kind == "compact_density") {
      CompactDensity cd;
      for (const auto& c : node.children) {
        if (c.name != "piece")
          throw ConfigError(c.line, c.name, "expected 'piece' blocks");
        PolyPiece p;
        p.lo = c.number("lo");
        p.hi = c.number("hi");
        const auto* e = c.find("coeffs");
        if (!e) throw ConfigError(c.line, "coeffs", "missing coefficients");
        for (const auto& v : e->values) {
          try {
            p.coeffs.push_back(std::stod(v));
          } catch (const std::exception&) {
            throw ConfigError(e->line, "coeffs", "not a number: '" + v + "'");
          }
        }
        cd.pieces.push_back(std::move(p));
      }
      return JumpMeasure(cd);
    }
    if (kind == "power_tail") {
      return JumpMeasure(PowerTail{node.number("amplitude"),
                                   node.number("alpha"), node.number("cutoff")});
    }
    if (kind == "sum") {
      SumMeasure sm;
      for (const auto& c : node.children) {
        if (c.name != "measure")
          throw ConfigError(c.line, c.name, "expected nested 'measure' blocks");
        sm.parts.push_back(measure_from_node(c));
      }
      return JumpMeasure(sm);
    }
  } catch (const DomainError& e) {
    throw ConfigError(node.line, "measure", e.what());
  }
  throw ConfigError(node.line, "kind", "unknown measure kind '" + kind + "'");
}

inline ConfigNode parse_config(std::string_view text) {
  detail::Lexer lex(text);
  ConfigNode root;
  root.name = "<root>";
  detail::parse_block(lex, root, true);
  return root;
}

inline ProcessSpec parse_process_spec(std::string_view text) {
  const ConfigNode root = parse_config(text);
  ProcessSpec spec;
  spec.drift = root.number("drift");
  spec.label = root.text("label", "unnamed");
  const ConfigNode* measure = nullptr;
  for (const auto& c : root.children)
    if (c.name == "measure") measure = &c;
  if (!measure) throw ConfigError(0, "measure", "missing measure block");
  spec.measure = measure_from_node(*measure);
  return spec;
}

inline ProcessSpec load_process_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "file", "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_process_spec(ss.str());
}

}  // namespace levypass
