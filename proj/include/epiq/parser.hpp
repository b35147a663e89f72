#ifndef EPIQ_PARSER_HPP
#define EPIQ_PARSER_HPP

// Surface-syntax parser for the formula language.
//
//   atom      := IDENT | IDENT "=" VALUE
//   unary     := ("!" | knows-head | ctx-head) unary | primary
//   primary   := "(" formula ")" | atom
//   knows-head:= "K[" IDENT ("@" INT)? ("," ("l" | "g"))? "]"
//   ctx-head  := "ctx[" entry (";" entry)* "]"
//   entry     := "(" IDENT ("@" INT)? "," ("l" | "g") ")"
//
// Binding, tightest first: unary operators, "&", "|", "->" (right
// associative), "<->". Errors carry a 1-based line/column and the set of
// tokens that would have been accepted.

#include <cctype>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "epiq/formula.hpp"

namespace epiq {

/// Syntax error with source position and the expected-token set.
class ParseError : public Error {
 public:
  int line;
  int column;
  std::vector<std::string> expected;

  ParseError(int line_, int column_, std::vector<std::string> expected_,
             const std::string& got)
      : Error(format(line_, column_, expected_, got)),
        line(line_),
        column(column_),
        expected(std::move(expected_)) {}

 private:
  static std::string format(int line, int column,
                            const std::vector<std::string>& expected,
                            const std::string& got) {
    std::string msg = std::to_string(line) + ":" + std::to_string(column) +
                      ": expected ";
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (i) msg += (i + 1 == expected.size()) ? " or " : ", ";
      msg += expected[i];
    }
    msg += ", got " + got;
    return msg;
  }
};

namespace detail {

enum class Tok {
  Ident,    // [A-Za-z_][A-Za-z0-9_]*
  Number,   // [0-9]+
  LParen,
  RParen,
  LBracket,
  RBracket,
  At,
  Comma,
  Semicolon,
  Equals,
  Bang,
  Amp,
  Pipe,
  Arrow,     // ->
  DArrow,    // <->
  End,
};

struct Token {
  Tok kind;
  std::string text;
  int line;
  int column;

  std::string describe() const {
    if (kind == Tok::End) return "end of input";
    return "'" + text + "'";
  }
};

class Lexer {
 public:
  explicit Lexer(const std::string& text) : src_(text) { advance(); }

  const Token& peek() const { return tok_; }

  Token take() {
    Token t = tok_;
    advance();
    return t;
  }

 private:
  void advance() {
    while (pos_ < src_.size() &&
           std::isspace(static_cast<unsigned char>(src_[pos_])))
      bump();
    tok_.line = line_;
    tok_.column = col_;
    if (pos_ >= src_.size()) {
      tok_ = {Tok::End, "", line_, col_};
      return;
    }
    char c = src_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::string s;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
              src_[pos_] == '_'))
        s += take_char();
      tok_ = {Tok::Ident, s, tok_.line, tok_.column};
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::string s;
      while (pos_ < src_.size() &&
             std::isdigit(static_cast<unsigned char>(src_[pos_])))
        s += take_char();
      tok_ = {Tok::Number, s, tok_.line, tok_.column};
      return;
    }
    switch (c) {
      case '(': single(Tok::LParen); return;
      case ')': single(Tok::RParen); return;
      case '[': single(Tok::LBracket); return;
      case ']': single(Tok::RBracket); return;
      case '@': single(Tok::At); return;
      case ',': single(Tok::Comma); return;
      case ';': single(Tok::Semicolon); return;
      case '=': single(Tok::Equals); return;
      case '!': single(Tok::Bang); return;
      case '&': single(Tok::Amp); return;
      case '|': single(Tok::Pipe); return;
      case '-':
        if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '>') {
          bump();
          bump();
          tok_ = {Tok::Arrow, "->", tok_.line, tok_.column};
          return;
        }
        break;
      case '<':
        if (pos_ + 2 < src_.size() && src_[pos_ + 1] == '-' &&
            src_[pos_ + 2] == '>') {
          bump();
          bump();
          bump();
          tok_ = {Tok::DArrow, "<->", tok_.line, tok_.column};
          return;
        }
        break;
      default:
        break;
    }
    throw ParseError(line_, col_, {"a formula token"},
                     "'" + std::string(1, c) + "'");
  }

  void single(Tok k) {
    tok_ = {k, std::string(1, src_[pos_]), tok_.line, tok_.column};
    bump();
  }

  char take_char() {
    char c = src_[pos_];
    bump();
    return c;
  }

  void bump() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  const std::string& src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
  Token tok_{Tok::End, "", 1, 1};
};

class Parser {
 public:
  Parser(const std::string& text, const OutcomeDomains* domains)
      : lex_(text), domains_(domains) {}

  FormulaPtr run() {
    FormulaPtr f = parse_iff();
    if (lex_.peek().kind != Tok::End) fail({"end of input"});
    return f;
  }

 private:
  [[noreturn]] void fail(std::vector<std::string> expected) {
    const Token& t = lex_.peek();
    throw ParseError(t.line, t.column, std::move(expected), t.describe());
  }

  Token expect(Tok k, const std::string& what) {
    if (lex_.peek().kind != k) fail({what});
    return lex_.take();
  }

  FormulaPtr parse_iff() {
    FormulaPtr left = parse_implies();
    if (lex_.peek().kind == Tok::DArrow) {
      lex_.take();
      return equivalence(std::move(left), parse_iff());
    }
    return left;
  }

  FormulaPtr parse_implies() {
    FormulaPtr left = parse_or();
    if (lex_.peek().kind == Tok::Arrow) {
      lex_.take();
      return implication(std::move(left), parse_implies());
    }
    return left;
  }

  FormulaPtr parse_or() {
    FormulaPtr left = parse_and();
    while (lex_.peek().kind == Tok::Pipe) {
      lex_.take();
      left = disjunction(std::move(left), parse_and());
    }
    return left;
  }

  FormulaPtr parse_and() {
    FormulaPtr left = parse_unary();
    while (lex_.peek().kind == Tok::Amp) {
      lex_.take();
      left = conjunction(std::move(left), parse_unary());
    }
    return left;
  }

  FormulaPtr parse_unary() {
    const Token& t = lex_.peek();
    if (t.kind == Tok::Bang) {
      lex_.take();
      return negation(parse_unary());
    }
    if (t.kind == Tok::Ident && t.text == "K") {
      // "K" starts an operator only when '[' follows; otherwise it is an atom.
      Token k = lex_.take();
      if (lex_.peek().kind == Tok::LBracket) {
        auto [agent, mode] = parse_knows_head();
        return knows(std::move(agent), parse_unary(), mode);
      }
      return finish_atom(k);
    }
    if (t.kind == Tok::Ident && t.text == "ctx") {
      Token k = lex_.take();
      if (lex_.peek().kind == Tok::LBracket) {
        ContextVector ctx = parse_ctx_head();
        return tagged(std::move(ctx), parse_unary());
      }
      return finish_atom(k);
    }
    return parse_primary();
  }

  FormulaPtr parse_primary() {
    const Token& t = lex_.peek();
    if (t.kind == Tok::LParen) {
      lex_.take();
      FormulaPtr f = parse_iff();
      expect(Tok::RParen, "')'");
      return f;
    }
    if (t.kind == Tok::Ident) return finish_atom(lex_.take());
    fail({"'('", "'!'", "'K['", "'ctx['", "an identifier"});
  }

  // Called with the IDENT token already taken.
  FormulaPtr finish_atom(const Token& ident) {
    if (lex_.peek().kind == Tok::Equals) {
      lex_.take();
      const Token& v = lex_.peek();
      if (v.kind != Tok::Ident && v.kind != Tok::Number) fail({"a value"});
      Token val = lex_.take();
      if (domains_) return outcome(*domains_, ident.text, val.text);
      return outcome(ident.text, val.text);
    }
    return prop(ident.text);
  }

  std::pair<AgentInstance, std::optional<Mode>> parse_knows_head() {
    expect(Tok::LBracket, "'['");
    AgentInstance agent = parse_agent();
    std::optional<Mode> mode;
    if (lex_.peek().kind == Tok::Comma) {
      lex_.take();
      mode = parse_mode();
    }
    expect(Tok::RBracket, "']'");
    return {std::move(agent), mode};
  }

  ContextVector parse_ctx_head() {
    expect(Tok::LBracket, "'['");
    ContextVector ctx;
    while (true) {
      expect(Tok::LParen, "'('");
      ContextEntry e;
      e.agent = parse_agent();
      expect(Tok::Comma, "','");
      e.mode = parse_mode();
      expect(Tok::RParen, "')'");
      ctx.push_back(std::move(e));
      if (lex_.peek().kind != Tok::Semicolon) break;
      lex_.take();
    }
    expect(Tok::RBracket, "']'");
    return ctx;
  }

  AgentInstance parse_agent() {
    Token name = expect(Tok::Ident, "an agent name");
    AgentInstance agent(name.text);
    if (lex_.peek().kind == Tok::At) {
      lex_.take();
      Token t = expect(Tok::Number, "a tick number");
      agent.time = std::stoi(t.text);
    }
    return agent;
  }

  Mode parse_mode() {
    const Token& t = lex_.peek();
    if (t.kind == Tok::Ident && (t.text == "l" || t.text == "g"))
      return lex_.take().text == "l" ? Mode::Local : Mode::Global;
    fail({"'l'", "'g'"});
  }

  Lexer lex_;
  const OutcomeDomains* domains_;
};

}  // namespace detail

/// Parse surface syntax into a formula. When `domains` is given, outcome
/// atoms are validated against it.
inline FormulaPtr parse(const std::string& text,
                        const OutcomeDomains* domains = nullptr) {
  return detail::Parser(text, domains).run();
}

}  // namespace epiq

#endif  // EPIQ_PARSER_HPP
