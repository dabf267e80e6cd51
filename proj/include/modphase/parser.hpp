#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "modphase/error.hpp"
#include "modphase/expr.hpp"
#include "modphase/symbolic.hpp"

namespace modphase {

namespace detail {

enum class TokenKind { Number, Identifier, Plus, Minus, Star, Slash, Caret, LParen, RParen, End };

struct Token {
  TokenKind kind;
  std::size_t offset;
  std::string_view text;
  double number = 0.0;
};

inline bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
inline bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

class Lexer {
 public:
  explicit Lexer(std::string_view src, std::size_t pos = 0) : src_(src), pos_(pos) {}

  Token next() {
    while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\r'))
      ++pos_;
    const std::size_t start = pos_;
    if (pos_ >= src_.size()) return {TokenKind::End, start, {}};
    const char c = src_[pos_];
    auto single = [&](TokenKind k) {
      ++pos_;
      return Token{k, start, src_.substr(start, 1)};
    };
    switch (c) {
      case '+': return single(TokenKind::Plus);
      case '-': return single(TokenKind::Minus);
      case '*': return single(TokenKind::Star);
      case '/': return single(TokenKind::Slash);
      case '^': return single(TokenKind::Caret);
      case '(': return single(TokenKind::LParen);
      case ')': return single(TokenKind::RParen);
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number(start);
    if (is_ident_start(c)) {
      while (pos_ < src_.size() && is_ident_char(src_[pos_])) ++pos_;
      return {TokenKind::Identifier, start, src_.substr(start, pos_ - start)};
    }
    throw SyntaxError(std::string("unexpected character '") + c + "'", start,
                      {"number", "identifier", "(", "-"});
  }

 private:
  Token number(std::size_t start) {
    std::size_t p = pos_;
    while (p < src_.size() && std::isdigit(static_cast<unsigned char>(src_[p]))) ++p;
    if (p < src_.size() && src_[p] == '.') {
      ++p;
      while (p < src_.size() && std::isdigit(static_cast<unsigned char>(src_[p]))) ++p;
    }
    if (p < src_.size() && (src_[p] == 'e' || src_[p] == 'E')) {
      std::size_t q = p + 1;
      if (q < src_.size() && (src_[q] == '+' || src_[q] == '-')) ++q;
      if (q < src_.size() && std::isdigit(static_cast<unsigned char>(src_[q]))) {
        while (q < src_.size() && std::isdigit(static_cast<unsigned char>(src_[q]))) ++q;
        p = q;
      }
    }
    double value = 0.0;
    auto [end, ec] = std::from_chars(src_.data() + start, src_.data() + p, value);
    if (ec != std::errc() || end != src_.data() + p || !std::isfinite(value))
      throw SyntaxError("malformed number", start, {"number"});
    pos_ = p;
    return {TokenKind::Number, start, src_.substr(start, p - start), value};
  }

  std::string_view src_;
  std::size_t pos_;
};

class ExprParser {
 public:
  ExprParser(std::string_view src, std::size_t pos) : lexer_(src, pos) {
    advance();
    peek_ = lexer_peek();
  }

  Expr expression() {
    Expr lhs = term();
    while (cur_.kind == TokenKind::Plus || cur_.kind == TokenKind::Minus) {
      const BinaryOp op = cur_.kind == TokenKind::Plus ? BinaryOp::Add : BinaryOp::Sub;
      advance();
      lhs = checked(Expr::binary(op, lhs, term()));
    }
    return lhs;
  }

  const Token& current() const { return cur_; }

 private:
  static constexpr int kMaxRecursion = 256;

  struct DepthGuard {
    int& depth;
    DepthGuard(int& d, std::size_t offset) : depth(d) {
      if (++depth > kMaxRecursion) throw SyntaxError("expression nested too deeply", offset, {});
    }
    ~DepthGuard() { --depth; }
  };

  Token lexer_peek() {
    Lexer copy = lexer_;
    return copy.next();
  }

  void advance() {
    cur_ = lexer_.next();
    peek_ = lexer_peek();
  }

  Expr checked(Expr e) const {
    if (e.depth() > kMaxExprDepth)
      throw SyntaxError("expression depth exceeds " + std::to_string(kMaxExprDepth), cur_.offset, {});
    return e;
  }

  Expr term() {
    Expr lhs = unary();
    while (cur_.kind == TokenKind::Star || cur_.kind == TokenKind::Slash) {
      const bool div = cur_.kind == TokenKind::Slash;
      const std::size_t at = cur_.offset;
      advance();
      Expr rhs = unary();
      if (div && rhs.is_constant() && rhs.as<node::Constant>()->value == 0.0)
        throw SyntaxError("division by constant zero", at, {});
      lhs = checked(Expr::binary(div ? BinaryOp::Div : BinaryOp::Mul, lhs, rhs));
    }
    return lhs;
  }

  Expr unary() {
    DepthGuard guard(depth_, cur_.offset);
    if (cur_.kind == TokenKind::Minus) {
      // A minus sign directly on a numeric literal is the literal's sign,
      // unless the literal is the base of a power ("-2^2" is -(2^2)).
      if (peek_.kind == TokenKind::Number) {
        Lexer after = lexer_;
        after.next();
        if (after.next().kind != TokenKind::Caret) {
          advance();
          const double v = cur_.number;
          advance();
          return Expr::constant(-v);
        }
      }
      advance();
      return checked(Expr::neg(unary()));
    }
    return power();
  }

  Expr power() {
    Expr base = primary();
    if (cur_.kind != TokenKind::Caret) return base;
    const std::size_t at = cur_.offset;
    advance();
    Expr exponent = unary();
    if (!free_symbols(exponent).empty())
      throw SyntaxError("exponent must be a constant", at + 1, {"number"});
    if (!exponent.is_constant()) exponent = Expr::constant(fold_constant(exponent, at + 1));
    return checked(Expr::binary(BinaryOp::Pow, base, exponent));
  }

  static double fold_constant(const Expr& e, std::size_t at) {
    try {
      return evaluate(e, {});
    } catch (const Error&) {
      throw SyntaxError("exponent does not evaluate to a finite constant", at, {"number"});
    }
  }

  Expr primary() {
    DepthGuard guard(depth_, cur_.offset);
    switch (cur_.kind) {
      case TokenKind::Number: {
        const double v = cur_.number;
        advance();
        return Expr::constant(v);
      }
      case TokenKind::Identifier: {
        const Token ident = cur_;
        advance();
        if (cur_.kind != TokenKind::LParen) return Expr::variable(std::string(ident.text));
        const auto fn = function_from_name(ident.text);
        if (!fn)
          throw Error(ErrorCode::UnknownFunction, "unknown function '" + std::string(ident.text) +
                                                      "' at offset " + std::to_string(ident.offset));
        advance();
        Expr arg = expression();
        expect_rparen();
        return checked(Expr::call(*fn, arg));
      }
      case TokenKind::LParen: {
        advance();
        Expr inner = expression();
        expect_rparen();
        return inner;
      }
      case TokenKind::End:
        throw SyntaxError("unexpected end of input", cur_.offset, {"number", "identifier", "(", "-"});
      default:
        throw SyntaxError("unexpected '" + std::string(cur_.text) + "'", cur_.offset,
                          {"number", "identifier", "(", "-"});
    }
  }

  void expect_rparen() {
    if (cur_.kind != TokenKind::RParen)
      throw SyntaxError(cur_.kind == TokenKind::End ? "unexpected end of input"
                                                    : "unexpected '" + std::string(cur_.text) + "'",
                        cur_.offset, {")"});
    advance();
  }

  Lexer lexer_;
  Token cur_{TokenKind::End, 0, {}};
  Token peek_{TokenKind::End, 0, {}};
  int depth_ = 0;
};

}  // namespace detail

struct PrefixParse {
  Expr expr;
  std::size_t end;  // offset of the first unconsumed token
};

// Parses the longest expression starting at `offset`, stopping at the first
// token that cannot continue it. Used by the definition-file reader where an
// expression is followed by keywords.
inline PrefixParse parse_prefix(std::string_view source, std::size_t offset = 0) {
  detail::ExprParser parser(source, offset);
  Expr e = parser.expression();
  return {e, parser.current().offset};
}

inline Expr parse(std::string_view source) {
  detail::ExprParser parser(source, 0);
  if (parser.current().kind == detail::TokenKind::End)
    throw SyntaxError("empty expression", 0, {"number", "identifier", "(", "-"});
  Expr e = parser.expression();
  const auto& tok = parser.current();
  if (tok.kind != detail::TokenKind::End) {
    std::vector<std::string> expected{"+", "-", "*", "/", "^", "end of input"};
    if (tok.kind == detail::TokenKind::Identifier || tok.kind == detail::TokenKind::Number ||
        tok.kind == detail::TokenKind::LParen)
      throw SyntaxError("implicit multiplication is not allowed before '" + std::string(tok.text) + "'",
                        tok.offset, expected);
    throw SyntaxError("unexpected '" + std::string(tok.text) + "'", tok.offset, expected);
  }
  return e;
}

}  // namespace modphase
