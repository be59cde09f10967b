#pragma once

#include <cctype>
#include <cstddef>
#include <string>
#include <vector>

#include "cli_error.hpp"

namespace cli {

// Parsed model formula. The grammar is
//   response ~ term (+ term)*      when a response is expected
//   ~ term (+ term)*               for dispersion formulas
// where each term is a column name or the literal 1. The intercept is always
// implicit; 1 is only valid as the sole term and yields an intercept-only
// model (empty term list).
struct Formula {
  std::string response;
  std::vector<std::string> terms;
};

namespace detail {

struct Token {
  enum Type { ident, one, tilde, plus, end } type;
  std::string text;
  std::size_t pos;  // 1-based position in the formula string
};

inline bool ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

inline bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
}

class Lexer {
 public:
  Lexer(const std::string& text, const std::string& flag)
      : text_(text), flag_(flag) {}

  Token next() {
    while (i_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[i_]))) {
      ++i_;
    }
    std::size_t pos = i_ + 1;
    if (i_ >= text_.size()) return {Token::end, "", pos};
    char c = text_[i_];
    if (c == '~') {
      ++i_;
      return {Token::tilde, "~", pos};
    }
    if (c == '+') {
      ++i_;
      return {Token::plus, "+", pos};
    }
    if (c == '1' && (i_ + 1 >= text_.size() || !ident_char(text_[i_ + 1]))) {
      ++i_;
      return {Token::one, "1", pos};
    }
    if (ident_start(c)) {
      std::size_t start = i_;
      while (i_ < text_.size() && ident_char(text_[i_])) ++i_;
      return {Token::ident, text_.substr(start, i_ - start), pos};
    }
    fail(pos, std::string("unexpected character '") + c + "'");
  }

  [[noreturn]] void fail(std::size_t pos, const std::string& what) const {
    throw CliError{2, flag_ + ": position " + std::to_string(pos) + ": " +
                          what + " in formula '" + text_ + "'"};
  }

 private:
  const std::string& text_;
  std::string flag_;
  std::size_t i_ = 0;
};

}  // namespace detail

// Parses a formula, reporting errors with their 1-based character position
// and the offending flag name. expect_response selects between the two
// grammar forms above.
inline Formula parse_formula(const std::string& text, bool expect_response,
                             const std::string& flag) {
  detail::Lexer lex(text, flag);
  Formula out;

  detail::Token tok = lex.next();
  if (expect_response) {
    if (tok.type != detail::Token::ident)
      lex.fail(tok.pos, "expected a response column name");
    out.response = tok.text;
    tok = lex.next();
  }
  if (tok.type != detail::Token::tilde) lex.fail(tok.pos, "expected '~'");

  bool saw_one = false;
  std::size_t one_pos = 0;
  for (;;) {
    tok = lex.next();
    if (tok.type == detail::Token::one) {
      saw_one = true;
      one_pos = tok.pos;
    } else if (tok.type == detail::Token::ident) {
      for (const std::string& seen : out.terms) {
        if (seen == tok.text)
          lex.fail(tok.pos, "duplicate term '" + tok.text + "'");
      }
      out.terms.push_back(tok.text);
    } else {
      lex.fail(tok.pos, "expected a column name or 1");
    }
    tok = lex.next();
    if (tok.type == detail::Token::end) break;
    if (tok.type != detail::Token::plus)
      lex.fail(tok.pos, "expected '+' or end of formula");
  }

  if (saw_one && !out.terms.empty()) {
    lex.fail(one_pos,
             "1 is only valid as the sole term; the intercept is implicit");
  }
  return out;
}

}  // namespace cli
