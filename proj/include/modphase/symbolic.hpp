#pragma once

#include <array>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "modphase/error.hpp"
#include "modphase/expr.hpp"

namespace modphase {

using Bindings = std::map<std::string, double, std::less<>>;

inline double apply_function(Function fn, double u) {
  switch (fn) {
    case Function::Tanh: return std::tanh(u);
    case Function::Sech: return 1.0 / std::cosh(u);
    case Function::Sinh: return std::sinh(u);
    case Function::Cosh: return std::cosh(u);
    case Function::Exp:  return std::exp(u);
    case Function::Ln:   return std::log(u);
    case Function::Sin:  return std::sin(u);
    case Function::Cos:  return std::cos(u);
  }
  return std::nan("");
}

inline double apply_binary(BinaryOp op, double a, double b) {
  switch (op) {
    case BinaryOp::Add: return a + b;
    case BinaryOp::Sub: return a - b;
    case BinaryOp::Mul: return a * b;
    case BinaryOp::Div: return a / b;
    case BinaryOp::Pow: return std::pow(a, b);
  }
  return std::nan("");
}

namespace detail {

inline double finite_or_throw(double v, const char* what) {
  if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteResult, std::string("non-finite value from ") + what);
  return v;
}

inline const char* op_name(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add: return "+";
    case BinaryOp::Sub: return "-";
    case BinaryOp::Mul: return "*";
    case BinaryOp::Div: return "/";
    case BinaryOp::Pow: return "^";
  }
  return "?";
}

}  // namespace detail

// Tree-walking evaluation. Every intermediate value must be finite, so
// overflow or ln of a non-positive number is reported rather than masked
// by a later saturating function.
inline double evaluate(const Expr& e, const Bindings& bindings) {
  if (const auto* c = e.as<node::Constant>()) return c->value;
  if (const auto* v = e.as<node::Variable>()) {
    auto it = bindings.find(v->name);
    if (it == bindings.end()) throw Error(ErrorCode::UnboundVariable, "variable '" + v->name + "' is not bound");
    return it->second;
  }
  if (const auto* n = e.as<node::Neg>()) return -evaluate(*n->operand, bindings);
  if (const auto* call = e.as<node::Call>()) {
    const double u = evaluate(*call->arg, bindings);
    if (call->fn == Function::Ln && u <= 0.0)
      throw Error(ErrorCode::NonFiniteResult, "ln of non-positive value");
    return detail::finite_or_throw(apply_function(call->fn, u), function_name(call->fn).data());
  }
  const auto& b = *e.as<node::Binary>();
  const double lhs = evaluate(*b.lhs, bindings);
  const double rhs = evaluate(*b.rhs, bindings);
  return detail::finite_or_throw(apply_binary(b.op, lhs, rhs), detail::op_name(b.op));
}

// ---------------------------------------------------------------------------
// Simplifying constructors: constant folding and 0/1 identities only.

namespace simplify {

inline bool is_zero(const Expr& e) { return e.is_constant(0.0); }
inline bool is_one(const Expr& e) { return e.is_constant(1.0); }

inline std::optional<double> constant_value(const Expr& e) {
  if (const auto* c = e.as<node::Constant>()) return c->value;
  return std::nullopt;
}

inline Expr constant(double v) { return Expr::constant(v == 0.0 ? 0.0 : v); }

inline Expr neg(const Expr& a) {
  if (auto c = constant_value(a)) return constant(-*c);
  if (const auto* n = a.as<node::Neg>()) return *n->operand;
  return Expr::neg(a);
}

inline Expr add(const Expr& a, const Expr& b) {
  auto ca = constant_value(a);
  auto cb = constant_value(b);
  if (ca && cb) return constant(*ca + *cb);
  if (is_zero(a)) return b;
  if (is_zero(b)) return a;
  if (const auto* n = b.as<node::Neg>()) return Expr::binary(BinaryOp::Sub, a, *n->operand);
  return Expr::binary(BinaryOp::Add, a, b);
}

inline Expr sub(const Expr& a, const Expr& b) {
  auto ca = constant_value(a);
  auto cb = constant_value(b);
  if (ca && cb) return constant(*ca - *cb);
  if (is_zero(b)) return a;
  if (is_zero(a)) return neg(b);
  if (const auto* n = b.as<node::Neg>()) return Expr::binary(BinaryOp::Add, a, *n->operand);
  return Expr::binary(BinaryOp::Sub, a, b);
}

inline Expr mul(const Expr& a, const Expr& b) {
  auto ca = constant_value(a);
  auto cb = constant_value(b);
  if (ca && cb) return constant(*ca * *cb);
  if (is_zero(a) || is_zero(b)) return constant(0.0);
  if (is_one(a)) return b;
  if (is_one(b)) return a;
  if (ca && *ca == -1.0) return neg(b);
  if (cb && *cb == -1.0) return neg(a);
  // Pull negations outward so coefficients can meet and fold.
  if (const auto* n = a.as<node::Neg>()) return neg(mul(*n->operand, b));
  if (const auto* n = b.as<node::Neg>()) return neg(mul(a, *n->operand));
  // Keep constant coefficients on the left and merge nested ones.
  if (cb) return mul(b, a);
  if (ca) {
    if (const auto* inner = b.as<node::Binary>(); inner && inner->op == BinaryOp::Mul) {
      if (auto ci = constant_value(*inner->lhs)) return mul(constant(*ca * *ci), *inner->rhs);
    }
  }
  return Expr::binary(BinaryOp::Mul, a, b);
}

inline Expr div(const Expr& a, const Expr& b) {
  auto ca = constant_value(a);
  auto cb = constant_value(b);
  if (cb && *cb == 0.0) throw Error(ErrorCode::NonFiniteResult, "division by constant zero");
  if (ca && cb) return constant(*ca / *cb);
  if (is_zero(a)) return constant(0.0);
  if (is_one(b)) return a;
  if (const auto* n = a.as<node::Neg>()) return neg(div(*n->operand, b));
  if (cb) {
    // (k*u)/c -> (k/c)*u
    if (const auto* inner = a.as<node::Binary>(); inner && inner->op == BinaryOp::Mul) {
      if (auto ci = constant_value(*inner->lhs)) return mul(constant(*ci / *cb), *inner->rhs);
    }
  }
  return Expr::binary(BinaryOp::Div, a, b);
}

inline Expr pow(const Expr& base, double exponent) {
  if (exponent == 0.0) return constant(1.0);
  if (exponent == 1.0) return base;
  if (auto cb = constant_value(base)) {
    const double v = std::pow(*cb, exponent);
    if (std::isfinite(v)) return constant(v);
  }
  return Expr::binary(BinaryOp::Pow, base, Expr::constant(exponent));
}

inline Expr call(Function fn, const Expr& arg) {
  if (auto c = constant_value(arg)) {
    const double v = apply_function(fn, *c);
    if (std::isfinite(v) && !(fn == Function::Ln && *c <= 0.0)) return constant(v);
  }
  return Expr::call(fn, arg);
}

}  // namespace simplify

// Bottom-up rebuild of `e` through the simplifying constructors.
inline Expr simplified(const Expr& e) {
  if (e.as<node::Constant>() || e.as<node::Variable>()) return e;
  if (const auto* n = e.as<node::Neg>()) return simplify::neg(simplified(*n->operand));
  if (const auto* c = e.as<node::Call>()) return simplify::call(c->fn, simplified(*c->arg));
  const auto& b = *e.as<node::Binary>();
  Expr lhs = simplified(*b.lhs);
  Expr rhs = simplified(*b.rhs);
  switch (b.op) {
    case BinaryOp::Add: return simplify::add(lhs, rhs);
    case BinaryOp::Sub: return simplify::sub(lhs, rhs);
    case BinaryOp::Mul: return simplify::mul(lhs, rhs);
    case BinaryOp::Div: return simplify::div(lhs, rhs);
    case BinaryOp::Pow: return simplify::pow(lhs, rhs.as<node::Constant>()->value);
  }
  return e;
}

// Symbolic partial derivative of `e` with respect to `var`.
inline Expr differentiate(const Expr& e, std::string_view var) {
  using namespace simplify;
  if (e.as<node::Constant>()) return constant(0.0);
  if (const auto* v = e.as<node::Variable>()) return constant(v->name == var ? 1.0 : 0.0);
  if (const auto* n = e.as<node::Neg>()) return neg(differentiate(*n->operand, var));
  if (const auto* c = e.as<node::Call>()) {
    const Expr u = simplified(*c->arg);
    const Expr du = differentiate(u, var);
    if (is_zero(du)) return constant(0.0);
    Expr outer = constant(0.0);
    switch (c->fn) {
      case Function::Tanh: outer = pow(call(Function::Sech, u), 2.0); break;
      case Function::Sech: outer = neg(mul(call(Function::Sech, u), call(Function::Tanh, u))); break;
      case Function::Sinh: outer = call(Function::Cosh, u); break;
      case Function::Cosh: outer = call(Function::Sinh, u); break;
      case Function::Exp:  outer = call(Function::Exp, u); break;
      case Function::Ln:   return div(du, u);
      case Function::Sin:  outer = call(Function::Cos, u); break;
      case Function::Cos:  outer = neg(call(Function::Sin, u)); break;
    }
    return mul(outer, du);
  }
  const auto& b = *e.as<node::Binary>();
  const Expr u = simplified(*b.lhs);
  const Expr v = simplified(*b.rhs);
  switch (b.op) {
    case BinaryOp::Add: return add(differentiate(u, var), differentiate(v, var));
    case BinaryOp::Sub: return sub(differentiate(u, var), differentiate(v, var));
    case BinaryOp::Mul: {
      const Expr du = differentiate(u, var);
      const Expr dv = differentiate(v, var);
      return add(mul(du, v), mul(u, dv));
    }
    case BinaryOp::Div: {
      const Expr du = differentiate(u, var);
      const Expr dv = differentiate(v, var);
      if (is_zero(dv)) return div(du, v);
      return div(sub(mul(du, v), mul(u, dv)), pow(v, 2.0));
    }
    case BinaryOp::Pow: {
      const double n = v.as<node::Constant>()->value;
      const Expr du = differentiate(u, var);
      return mul(mul(constant(n), pow(u, n - 1.0)), du);
    }
  }
  return constant(0.0);
}

// ---------------------------------------------------------------------------
// Flat postfix program with pre-resolved variable slots, for evaluation in
// integration loops.

class CompiledExpr {
 public:
  CompiledExpr() = default;

  // `slots` lists the variable names in the order their values will be
  // supplied to operator(). Unknown symbols are reported here.
  CompiledExpr(const Expr& e, std::span<const std::string> slots) {
    emit(e, slots);
    int depth = 0;
    for (const auto& ins : code_) {
      depth += stack_effect(ins.op);
      max_stack_ = std::max(max_stack_, depth);
    }
  }

  double operator()(std::span<const double> values) const {
    if (max_stack_ <= kInlineStack) {
      std::array<double, kInlineStack> stack;
      return run(values, stack.data());
    }
    std::vector<double> stack(static_cast<std::size_t>(max_stack_));
    return run(values, stack.data());
  }

  std::size_t size() const { return code_.size(); }

 private:
  enum class Op { Const, Load, Neg, Add, Sub, Mul, Div, Square, Pow, Call };

  struct Instruction {
    Op op;
    double value = 0.0;
    std::size_t slot = 0;
    Function fn = Function::Tanh;
  };

  static constexpr int kInlineStack = 32;

  double run(std::span<const double> values, double* stack) const {
    int top = -1;
    for (const auto& ins : code_) {
      switch (ins.op) {
        case Op::Const: stack[++top] = ins.value; break;
        case Op::Load: stack[++top] = values[ins.slot]; break;
        case Op::Neg: stack[top] = -stack[top]; break;
        case Op::Add: --top; stack[top] = checked(stack[top] + stack[top + 1], "+"); break;
        case Op::Sub: --top; stack[top] = checked(stack[top] - stack[top + 1], "-"); break;
        case Op::Mul: --top; stack[top] = checked(stack[top] * stack[top + 1], "*"); break;
        case Op::Div: --top; stack[top] = checked(stack[top] / stack[top + 1], "/"); break;
        case Op::Square: stack[top] = checked(stack[top] * stack[top], "^"); break;
        case Op::Pow: --top; stack[top] = checked(std::pow(stack[top], stack[top + 1]), "^"); break;
        case Op::Call: {
          if (ins.fn == Function::Ln && stack[top] <= 0.0)
            throw Error(ErrorCode::NonFiniteResult, "ln of non-positive value");
          stack[top] = checked(apply_function(ins.fn, stack[top]), "function call");
          break;
        }
      }
    }
    return stack[0];
  }

  static double checked(double v, const char* what) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteResult, std::string("non-finite value from ") + what);
    return v;
  }

  static int stack_effect(Op op) {
    switch (op) {
      case Op::Const:
      case Op::Load: return 1;
      case Op::Add:
      case Op::Sub:
      case Op::Mul:
      case Op::Div:
      case Op::Pow: return -1;
      default: return 0;
    }
  }

  void emit(const Expr& e, std::span<const std::string> slots) {
    if (const auto* c = e.as<node::Constant>()) {
      code_.push_back({Op::Const, c->value});
    } else if (const auto* v = e.as<node::Variable>()) {
      for (std::size_t i = 0; i < slots.size(); ++i) {
        if (slots[i] == v->name) {
          code_.push_back({Op::Load, 0.0, i});
          return;
        }
      }
      throw Error(ErrorCode::UnknownSymbol, "symbol '" + v->name + "' is neither a variable nor a parameter");
    } else if (const auto* n = e.as<node::Neg>()) {
      emit(*n->operand, slots);
      code_.push_back({Op::Neg});
    } else if (const auto* call = e.as<node::Call>()) {
      emit(*call->arg, slots);
      code_.push_back({Op::Call, 0.0, 0, call->fn});
    } else {
      const auto& b = *e.as<node::Binary>();
      emit(*b.lhs, slots);
      if (b.op == BinaryOp::Pow) {
        const double p = b.rhs->as<node::Constant>()->value;
        if (p == 2.0) {
          code_.push_back({Op::Square});
          return;
        }
      }
      emit(*b.rhs, slots);
      switch (b.op) {
        case BinaryOp::Add: code_.push_back({Op::Add}); break;
        case BinaryOp::Sub: code_.push_back({Op::Sub}); break;
        case BinaryOp::Mul: code_.push_back({Op::Mul}); break;
        case BinaryOp::Div: code_.push_back({Op::Div}); break;
        case BinaryOp::Pow: code_.push_back({Op::Pow}); break;
      }
    }
  }

  std::vector<Instruction> code_;
  int max_stack_ = 0;
};

}  // namespace modphase
