// Concrete syntax for formulas and JSON documents for models.
//
//   formula := iff
//   iff     := imp ("<->" imp)*
//   imp     := or ("->" imp)?
//   or      := and ("|" and)*
//   and     := unary ("&" unary)*
//   unary   := "!" unary | "<>" unary | "[]" unary | ("mu"|"nu") NAME "." formula
//            | "true" | "false" | NAME | "(" formula ")"
//
// "->" and "<->" are input sugar for ~a | b and its conjunction.
#pragma once

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mucalc/formula.hpp"
#include "mucalc/kripke.hpp"

namespace mucalc {

struct SourceSpan {
  std::size_t start = 0;
  std::size_t end = 0;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, SourceSpan span)
      : std::runtime_error(msg + " at " + std::to_string(span.start) + ".." + std::to_string(span.end)),
        span_(span) {}
  SourceSpan span() const { return span_; }

 private:
  SourceSpan span_;
};

namespace detail {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Formula parse() {
    Formula f = parse_iff();
    skip_ws();
    if (pos_ < text_.size()) fail("unexpected input", pos_, pos_ + 1);
    return f;
  }

 private:
  enum class Tok { End, Name, LParen, RParen, Not, And, Or, Dia, Box, Dot, Imp, Iff, Mu, Nu, True, False, Bad };

  [[noreturn]] void fail(const std::string& msg, std::size_t a, std::size_t b) const {
    throw ParseError(msg, {a, std::min(b, text_.size())});
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool starts(std::string_view s) const { return text_.substr(pos_, s.size()) == s; }

  // Classifies the next token without consuming it; sets len_ and name_.
  Tok peek() {
    skip_ws();
    tok_start_ = pos_;
    if (pos_ >= text_.size()) return Tok::End;
    struct Sym {
      std::string_view text;
      Tok tok;
    };
    static const Sym syms[] = {
        {"<->", Tok::Iff}, {"->", Tok::Imp}, {"<>", Tok::Dia}, {"[]", Tok::Box}, {"(", Tok::LParen},
        {")", Tok::RParen}, {"!", Tok::Not}, {"&", Tok::And}, {"|", Tok::Or}, {".", Tok::Dot},
        {"◇", Tok::Dia}, {"□", Tok::Box}, {"¬", Tok::Not}, {"∧", Tok::And},
        {"∨", Tok::Or}, {"μ", Tok::Mu}, {"ν", Tok::Nu}};
    for (const auto& s : syms)
      if (starts(s.text)) {
        len_ = s.text.size();
        return s.tok;
      }
    char c = text_[pos_];
    if (c >= 'a' && c <= 'z') {
      std::size_t e = pos_ + 1;
      while (e < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[e])) || text_[e] == '_')) ++e;
      name_ = std::string(text_.substr(pos_, e - pos_));
      len_ = e - pos_;
      if (name_ == "mu") return Tok::Mu;
      if (name_ == "nu") return Tok::Nu;
      if (name_ == "true") return Tok::True;
      if (name_ == "false") return Tok::False;
      return Tok::Name;
    }
    len_ = 1;
    return Tok::Bad;
  }

  void advance() { pos_ += len_; }

  void expect(Tok t, const char* what) {
    if (peek() != t) fail(std::string("expected ") + what, tok_start_, tok_start_ + std::max<std::size_t>(len_, 1));
    advance();
  }

  Formula parse_iff() {
    Formula f = parse_imp();
    while (peek() == Tok::Iff) {
      advance();
      f = iff(f, parse_imp());
    }
    return f;
  }

  Formula parse_imp() {
    Formula f = parse_or();
    if (peek() == Tok::Imp) {
      advance();
      return implies(f, parse_imp());
    }
    return f;
  }

  Formula parse_or() {
    Formula f = parse_and();
    while (peek() == Tok::Or) {
      advance();
      f = Formula::lor(f, parse_and());
    }
    return f;
  }

  Formula parse_and() {
    Formula f = parse_unary();
    while (peek() == Tok::And) {
      advance();
      f = Formula::land(f, parse_unary());
    }
    return f;
  }

  Formula parse_unary() {
    Tok t = peek();
    std::size_t at = tok_start_;
    switch (t) {
      case Tok::Not: {
        advance();
        Formula b = parse_unary();
        return b.kind() == Kind::Atom ? Formula::neg_atom(b.name()) : negate(b);
      }
      case Tok::Dia:
        advance();
        return Formula::diamond(parse_unary());
      case Tok::Box:
        advance();
        return Formula::box(parse_unary());
      case Tok::Mu:
      case Tok::Nu: {
        advance();
        if (peek() != Tok::Name) fail("expected a variable after binder", tok_start_, tok_start_ + len_);
        std::string var = name_;
        advance();
        expect(Tok::Dot, "'.'");
        Formula b = parse_iff();
        return Formula::binder(t == Tok::Mu ? Kind::Mu : Kind::Nu, var, b);
      }
      case Tok::True:
        advance();
        return Formula::top();
      case Tok::False:
        advance();
        return Formula::bottom();
      case Tok::Name:
        advance();
        return Formula::atom(name_);
      case Tok::LParen: {
        advance();
        Formula f = parse_iff();
        if (peek() != Tok::RParen) fail("expected ')'", at, tok_start_ + std::max<std::size_t>(len_, 1));
        advance();
        return f;
      }
      case Tok::End:
        fail("unexpected end of input", at, at);
      default:
        fail("unexpected token", at, at + len_);
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t tok_start_ = 0;
  std::size_t len_ = 0;
  std::string name_;
};

// Binding strength for printing: 0 binder, 1 or, 2 and, 3 unary/atomic.
inline int level(const Formula& f) {
  switch (f.kind()) {
    case Kind::Mu:
    case Kind::Nu:
      return 0;
    case Kind::Or:
      return 1;
    case Kind::And:
      return 2;
    default:
      return 3;
  }
}

inline void print(const Formula& f, std::string& out, bool rightmost);

inline void print_operand(const Formula& f, int min_level, bool rightmost, std::string& out) {
  // A binder extends maximally right, so it needs parentheses only when
  // something follows it.
  bool paren = level(f) < min_level && !(level(f) == 0 && rightmost);
  if (paren) out += '(';
  print(f, out, rightmost || paren);
  if (paren) out += ')';
}

inline void print(const Formula& f, std::string& out, bool rightmost) {
  switch (f.kind()) {
    case Kind::Atom:
      out += f.name();
      break;
    case Kind::NegAtom:
      out += '!';
      out += f.name();
      break;
    case Kind::Top:
      out += "true";
      break;
    case Kind::Bottom:
      out += "false";
      break;
    case Kind::Or:
    case Kind::And: {
      int lv = level(f);
      // Left-associative: a left operand of equal level needs no parentheses.
      print_operand(f.left(), lv, false, out);
      out += f.kind() == Kind::Or ? " | " : " & ";
      print_operand(f.right(), lv + 1, rightmost, out);
      break;
    }
    case Kind::Diamond:
    case Kind::Box:
      out += f.kind() == Kind::Diamond ? "<>" : "[]";
      print_operand(f.body(), 3, rightmost, out);
      break;
    case Kind::Mu:
    case Kind::Nu:
      out += f.kind() == Kind::Mu ? "mu " : "nu ";
      out += f.name();
      out += ". ";
      print(f.body(), out, true);
      break;
  }
}

}  // namespace detail

inline Formula parse_formula(std::string_view text) { return detail::Parser(text).parse(); }

inline std::string print_formula(const Formula& f) {
  std::string out;
  detail::print(f, out, true);
  return out;
}

// Formula files hold one formula per non-empty line; '#' starts a comment.
inline std::vector<Formula> parse_formula_list(std::string_view text) {
  std::vector<Formula> out;
  std::size_t line_start = 0;
  while (line_start <= text.size()) {
    std::size_t nl = text.find('\n', line_start);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(line_start, nl - line_start);
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    bool blank = true;
    for (char c : line)
      if (!std::isspace(static_cast<unsigned char>(c))) blank = false;
    if (!blank) {
      try {
        out.push_back(parse_formula(line));
      } catch (const ParseError& e) {
        throw ParseError(std::string("line ") + std::to_string(std::count(text.begin(), text.begin() + line_start, '\n') + 1) +
                             ": " + e.what(),
                         {line_start + e.span().start, line_start + e.span().end});
      }
    }
    line_start = nl + 1;
  }
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

// ---------------------------------------------------------------------------
// Models

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline KripkeModel model_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("states") || !j["states"].is_array())
    throw ModelError("model document needs a \"states\" array");
  KripkeModel m;
  for (const auto& s : j["states"]) {
    if (!s.is_string()) throw ModelError("state names must be strings");
    if (m.index_of(s.get<std::string>())) throw ModelError("duplicate state \"" + s.get<std::string>() + "\"");
    m.add_state(s.get<std::string>());
  }
  if (m.size() == 0) throw ModelError("model needs at least one state");
  auto state = [&](const nlohmann::json& s) {
    if (!s.is_string()) throw ModelError("state references must be strings");
    auto i = m.index_of(s.get<std::string>());
    if (!i) throw ModelError("undeclared state \"" + s.get<std::string>() + "\"");
    return *i;
  };
  if (j.contains("edges")) {
    if (!j["edges"].is_array()) throw ModelError("\"edges\" must be an array");
    for (const auto& e : j["edges"]) {
      if (!e.is_array() || e.size() != 2) throw ModelError("edges must be [from,to] pairs");
      m.add_edge(state(e[0]), state(e[1]));
    }
  }
  if (j.contains("valuation")) {
    if (!j["valuation"].is_object()) throw ModelError("\"valuation\" must be an object");
    for (const auto& [atom, states] : j["valuation"].items()) {
      if (!states.is_array()) throw ModelError("valuation of " + atom + " must be an array");
      StateSet x = m.empty_set();
      for (const auto& s : states) x.set(state(s));
      m.set_valuation(atom, x);
    }
  }
  return m;
}

inline KripkeModel read_model(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ModelError(std::string("malformed JSON: ") + e.what());
  }
  return model_from_json(j);
}

inline nlohmann::ordered_json model_to_json(const KripkeModel& m) {
  nlohmann::ordered_json j;
  j["states"] = m.names();
  auto edges = nlohmann::ordered_json::array();
  for (std::size_t s = 0; s < m.size(); ++s)
    for (std::size_t t = 0; t < m.size(); ++t)
      if (m.has_edge(s, t)) edges.push_back({m.name(s), m.name(t)});
  j["edges"] = edges;
  auto val = nlohmann::ordered_json::object();
  for (const auto& [atom, x] : m.valuation_map()) {
    auto arr = nlohmann::ordered_json::array();
    for (std::size_t s = 0; s < m.size(); ++s)
      if (x.test(s)) arr.push_back(m.name(s));
    val[atom] = arr;
  }
  j["valuation"] = val;
  return j;
}

inline std::string write_model(const KripkeModel& m) { return model_to_json(m).dump(); }

}  // namespace mucalc
