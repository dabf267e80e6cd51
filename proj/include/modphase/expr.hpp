#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>

#include "modphase/error.hpp"

namespace modphase {

enum class BinaryOp { Add, Sub, Mul, Div, Pow };

enum class Function { Tanh, Sech, Sinh, Cosh, Exp, Ln, Sin, Cos };

inline constexpr std::array<std::pair<std::string_view, Function>, 8> kFunctionNames{{
    {"tanh", Function::Tanh},
    {"sech", Function::Sech},
    {"sinh", Function::Sinh},
    {"cosh", Function::Cosh},
    {"exp", Function::Exp},
    {"ln", Function::Ln},
    {"sin", Function::Sin},
    {"cos", Function::Cos},
}};

inline std::string_view function_name(Function fn) {
  for (const auto& [name, f] : kFunctionNames)
    if (f == fn) return name;
  return "?";
}

inline std::optional<Function> function_from_name(std::string_view name) {
  for (const auto& [n, f] : kFunctionNames)
    if (n == name) return f;
  return std::nullopt;
}

inline constexpr int kMaxExprDepth = 64;

class Expr;

namespace node {
struct Constant {
  double value;
};
struct Variable {
  std::string name;
};
struct Neg {
  std::shared_ptr<const Expr> operand;
};
struct Binary {
  BinaryOp op;
  std::shared_ptr<const Expr> lhs;
  std::shared_ptr<const Expr> rhs;
};
struct Call {
  Function fn;
  std::shared_ptr<const Expr> arg;
};
}  // namespace node

// Immutable expression tree. Children are shared, so copies are shallow.
class Expr {
 public:
  using Node = std::variant<node::Constant, node::Variable, node::Neg, node::Binary, node::Call>;

  static Expr constant(double v) { return Expr(node::Constant{v}, 1); }
  static Expr variable(std::string name) { return Expr(node::Variable{std::move(name)}, 1); }
  static Expr neg(const Expr& e) { return Expr(node::Neg{share(e)}, 1 + e.depth_); }
  static Expr binary(BinaryOp op, const Expr& lhs, const Expr& rhs) {
    return Expr(node::Binary{op, share(lhs), share(rhs)}, 1 + std::max(lhs.depth_, rhs.depth_));
  }
  static Expr call(Function fn, const Expr& arg) {
    return Expr(node::Call{fn, share(arg)}, 1 + arg.depth_);
  }

  const Node& node() const { return node_; }

  template <class T>
  const T* as() const {
    return std::get_if<T>(&node_);
  }

  bool is_constant() const { return as<node::Constant>() != nullptr; }
  bool is_constant(double v) const {
    const auto* c = as<node::Constant>();
    return c != nullptr && c->value == v;
  }

  int depth() const { return depth_; }

 private:
  Expr(Node n, int depth) : node_(std::move(n)), depth_(depth) {}

  static std::shared_ptr<const Expr> share(const Expr& e) { return std::make_shared<const Expr>(e); }

  Node node_;
  int depth_;
};

bool structurally_equal(const Expr& a, const Expr& b);

inline bool operator==(const Expr& a, const Expr& b) { return structurally_equal(a, b); }

inline bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.node().index() != b.node().index()) return false;
  if (const auto* c = a.as<node::Constant>()) {
    // Bitwise equality, so that -0.0 and 0.0 differ and NaN never appears.
    return std::signbit(c->value) == std::signbit(b.as<node::Constant>()->value) &&
           c->value == b.as<node::Constant>()->value;
  }
  if (const auto* v = a.as<node::Variable>()) return v->name == b.as<node::Variable>()->name;
  if (const auto* n = a.as<node::Neg>()) return structurally_equal(*n->operand, *b.as<node::Neg>()->operand);
  if (const auto* bin = a.as<node::Binary>()) {
    const auto* o = b.as<node::Binary>();
    return bin->op == o->op && structurally_equal(*bin->lhs, *o->lhs) &&
           structurally_equal(*bin->rhs, *o->rhs);
  }
  const auto* call = a.as<node::Call>();
  const auto* o = b.as<node::Call>();
  return call->fn == o->fn && structurally_equal(*call->arg, *o->arg);
}

inline void collect_symbols(const Expr& e, std::set<std::string>& out) {
  std::visit(
      [&](const auto& n) {
        using N = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<N, node::Variable>) {
          out.insert(n.name);
        } else if constexpr (std::is_same_v<N, node::Neg>) {
          collect_symbols(*n.operand, out);
        } else if constexpr (std::is_same_v<N, node::Binary>) {
          collect_symbols(*n.lhs, out);
          collect_symbols(*n.rhs, out);
        } else if constexpr (std::is_same_v<N, node::Call>) {
          collect_symbols(*n.arg, out);
        }
      },
      e.node());
}

inline std::set<std::string> free_symbols(const Expr& e) {
  std::set<std::string> out;
  collect_symbols(e, out);
  return out;
}

// Shortest decimal text that reads back to the same double.
inline std::string format_number(double v) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw Error(ErrorCode::InvalidArgument, "cannot format number");
  return std::string(buf.data(), end);
}

namespace detail {

// Binding strength used by the printer; mirrors the parser's grammar.
inline int precedence(const Expr& e) {
  if (e.as<node::Neg>()) return 3;
  if (const auto* b = e.as<node::Binary>()) {
    switch (b->op) {
      case BinaryOp::Add:
      case BinaryOp::Sub: return 1;
      case BinaryOp::Mul:
      case BinaryOp::Div: return 2;
      case BinaryOp::Pow: return 4;
    }
  }
  return 5;
}

inline void print_to(const Expr& e, std::string& out);

inline void print_wrapped(const Expr& e, bool parens, std::string& out) {
  if (parens) out += '(';
  print_to(e, out);
  if (parens) out += ')';
}

inline void print_to(const Expr& e, std::string& out) {
  if (const auto* c = e.as<node::Constant>()) {
    if (std::signbit(c->value)) {
      out += '(';
      out += format_number(c->value);
      out += ')';
    } else {
      out += format_number(c->value);
    }
    return;
  }
  if (const auto* v = e.as<node::Variable>()) {
    out += v->name;
    return;
  }
  if (const auto* n = e.as<node::Neg>()) {
    out += '-';
    // "-2" would read back as the literal -2, so a negated constant keeps its parentheses.
    print_wrapped(*n->operand, precedence(*n->operand) < 3 || n->operand->is_constant(), out);
    return;
  }
  if (const auto* call = e.as<node::Call>()) {
    out += function_name(call->fn);
    out += '(';
    print_to(*call->arg, out);
    out += ')';
    return;
  }
  const auto& b = *e.as<node::Binary>();
  const int p = precedence(e);
  if (b.op == BinaryOp::Pow) {
    print_wrapped(*b.lhs, precedence(*b.lhs) <= 4, out);
    out += '^';
    print_wrapped(*b.rhs, precedence(*b.rhs) < 4, out);
    return;
  }
  print_wrapped(*b.lhs, precedence(*b.lhs) < p, out);
  switch (b.op) {
    case BinaryOp::Add: out += " + "; break;
    case BinaryOp::Sub: out += " - "; break;
    case BinaryOp::Mul: out += '*'; break;
    case BinaryOp::Div: out += '/'; break;
    case BinaryOp::Pow: break;
  }
  // Left-associative: an equal-precedence right operand needs parentheses.
  // A negation on the right is parenthesized for readability ("a*(-b)").
  print_wrapped(*b.rhs, precedence(*b.rhs) <= p || b.rhs->as<node::Neg>() != nullptr, out);
}

}  // namespace detail

// Text form accepted back by parse(); parse(print(e)) is structurally e.
inline std::string print(const Expr& e) {
  std::string out;
  detail::print_to(e, out);
  return out;
}

}  // namespace modphase
