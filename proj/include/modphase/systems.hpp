#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "modphase/error.hpp"
#include "modphase/expr.hpp"
#include "modphase/ode.hpp"
#include "modphase/parser.hpp"
#include "modphase/symbolic.hpp"

namespace modphase {

using SystemParams = std::map<std::string, double, std::less<>>;

// A two-variable nonlinear term f(modulator, input) singled out for
// modulation analysis.
struct NonlinearTermDef {
  Expr expr;
  std::string input_var;
  std::string modulator_var;
};

class SystemDef {
 public:
  SystemDef(std::string name, std::vector<std::string> state_vars, SystemParams params, std::vector<Expr> rhs,
            std::vector<NonlinearTermDef> terms, std::string source = {})
      : name_(std::move(name)),
        state_vars_(std::move(state_vars)),
        params_(std::move(params)),
        rhs_(std::move(rhs)),
        terms_(std::move(terms)),
        source_(std::move(source)) {
    validate();
    compile();
  }

  const std::string& name() const { return name_; }
  const std::vector<std::string>& state_vars() const { return state_vars_; }
  const SystemParams& params() const { return params_; }
  const std::vector<Expr>& rhs() const { return rhs_; }
  const std::vector<NonlinearTermDef>& terms() const { return terms_; }
  const NonlinearTermDef* term() const { return terms_.empty() ? nullptr : &terms_.front(); }
  const std::string& source() const { return source_; }

  std::size_t dimension() const { return state_vars_.size(); }

  std::optional<std::size_t> var_index(std::string_view var) const {
    auto it = std::find(state_vars_.begin(), state_vars_.end(), var);
    if (it == state_vars_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - state_vars_.begin());
  }

  // VectorField interface.
  void derivative(std::span<const double> x, std::span<double> dx) const {
    // Parameters occupy the slots after the state variables.
    std::array<double, 64> small{};
    std::vector<double> large;
    double* slots = small.data();
    const std::size_t n = state_vars_.size() + param_values_.size();
    if (n > small.size()) {
      large.resize(n);
      slots = large.data();
    }
    std::copy(x.begin(), x.end(), slots);
    std::copy(param_values_.begin(), param_values_.end(), slots + x.size());
    const std::span<const double> bound(slots, n);
    for (std::size_t i = 0; i < compiled_.size(); ++i) dx[i] = compiled_[i](bound);
  }

  // Copy with one parameter replaced.
  SystemDef with_param(std::string_view param, double value) const {
    auto it = params_.find(param);
    if (it == params_.end())
      throw Error(ErrorCode::UnknownParameter, "system '" + name_ + "' has no parameter '" + std::string(param) + "'");
    SystemParams p = params_;
    p[std::string(param)] = value;
    return SystemDef(name_, state_vars_, std::move(p), rhs_, terms_, source_);
  }

  StateVector default_initial_state() const { return StateVector(std::vector<double>(dimension(), 0.1)); }

 private:
  void validate() const {
    std::set<std::string> seen;
    for (const auto& v : state_vars_) {
      if (!seen.insert(v).second) throw Error(ErrorCode::InvalidArgument, "duplicate variable '" + v + "'");
      if (function_from_name(v)) throw Error(ErrorCode::InvalidArgument, "variable name '" + v + "' is a function name");
    }
    for (const auto& [p, value] : params_) {
      if (!seen.insert(p).second) throw Error(ErrorCode::InvalidArgument, "name '" + p + "' defined twice");
      if (!std::isfinite(value)) throw Error(ErrorCode::InvalidArgument, "parameter '" + p + "' is not finite");
    }
    if (rhs_.size() != state_vars_.size())
      throw Error(ErrorCode::InvalidArgument, "one right-hand side is required per state variable");

    std::set<std::string> referenced;
    for (const auto& e : rhs_) {
      for (const auto& s : free_symbols(e)) {
        if (!seen.count(s)) throw Error(ErrorCode::UnknownSymbol, "symbol '" + s + "' in system '" + name_ + "' is undefined");
        referenced.insert(s);
      }
    }
    for (const auto& t : terms_) {
      if (t.input_var == t.modulator_var)
        throw Error(ErrorCode::DegenerateTerm, "term input and modulator must be distinct variables");
      const bool has_vars = !state_vars_.empty();
      for (const auto* v : {&t.input_var, &t.modulator_var}) {
        if (has_vars && std::find(state_vars_.begin(), state_vars_.end(), *v) == state_vars_.end())
          throw Error(ErrorCode::UnknownSymbol, "term variable '" + *v + "' is not a state variable");
      }
      for (const auto& s : free_symbols(t.expr)) {
        if (s == t.input_var || s == t.modulator_var) continue;
        if (has_vars && !params_.count(s))
          throw Error(ErrorCode::UnknownSymbol, "symbol '" + s + "' in term is neither a term variable nor a parameter");
        referenced.insert(s);
      }
    }
    for (const auto& [p, value] : params_)
      if (!referenced.count(p)) throw Error(ErrorCode::InvalidArgument, "parameter '" + p + "' is never referenced");
  }

  void compile() {
    std::vector<std::string> slots = state_vars_;
    for (const auto& [p, value] : params_) {
      slots.push_back(p);
      param_values_.push_back(value);
    }
    compiled_.reserve(rhs_.size());
    for (const auto& e : rhs_) compiled_.emplace_back(e, slots);
  }

  std::string name_;
  std::vector<std::string> state_vars_;
  SystemParams params_;
  std::vector<Expr> rhs_;
  std::vector<NonlinearTermDef> terms_;
  std::string source_;
  std::vector<double> param_values_;
  std::vector<CompiledExpr> compiled_;
};

static_assert(VectorField<SystemDef>);

// ---------------------------------------------------------------------------
// Definition-file reader.
//
//   system <name>
//   param <name> = <constant expression>
//   var <name> : <expression>
//   term <expression> input <var> modulator <var>
//
// ';' or '#' starts a comment. Keywords are reserved and cannot name
// variables or parameters.

namespace detail {

inline const std::set<std::string, std::less<>>& reserved_words() {
  static const std::set<std::string, std::less<>> words{"system", "param", "var", "term", "input", "modulator"};
  return words;
}

struct LineCursor {
  std::string_view line;
  std::size_t line_no;
  std::size_t pos = 0;

  void skip_space() {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t' || line[pos] == '\r')) ++pos;
  }

  [[noreturn]] void fail(const std::string& what, std::vector<std::string> expected = {}) const {
    throw SyntaxError(what, pos, std::move(expected), line_no, pos + 1);
  }

  std::string identifier(const char* role) {
    skip_space();
    const std::size_t start = pos;
    if (pos >= line.size() || !is_ident_start(line[pos])) fail(std::string("expected ") + role, {"identifier"});
    while (pos < line.size() && is_ident_char(line[pos])) ++pos;
    return std::string(line.substr(start, pos - start));
  }

  std::string name(const char* role) {
    const std::size_t start = (skip_space(), pos);
    std::string id = identifier(role);
    if (reserved_words().count(id) || function_from_name(id)) {
      pos = start;
      fail("'" + id + "' is reserved and cannot be used as a " + role, {"identifier"});
    }
    return id;
  }

  void expect(char c) {
    skip_space();
    if (pos >= line.size() || line[pos] != c) fail(std::string("expected '") + c + "'", {std::string(1, c)});
    ++pos;
  }

  void expect_keyword(std::string_view kw) {
    const std::size_t start = (skip_space(), pos);
    std::string id = pos < line.size() && is_ident_start(line[pos]) ? identifier("keyword") : std::string();
    if (id != kw) {
      pos = start;
      fail("expected '" + std::string(kw) + "'", {std::string(kw)});
    }
  }

  void expect_end() {
    skip_space();
    if (pos < line.size()) fail("unexpected trailing text", {"end of line"});
  }

  Expr expression(bool to_end) {
    skip_space();
    try {
      if (to_end) {
        auto pp = parse_prefix(line, pos);
        pos = pp.end;
        if (pos < line.size()) {
          const char c = line[pos];
          if (is_ident_start(c) || std::isdigit(static_cast<unsigned char>(c)) || c == '(')
            fail("implicit multiplication is not allowed", {"+", "-", "*", "/", "^", "end of line"});
          fail("unexpected trailing text", {"+", "-", "*", "/", "^", "end of line"});
        }
        return pp.expr;
      }
      auto pp = parse_prefix(line, pos);
      pos = pp.end;
      return pp.expr;
    } catch (const SyntaxError& e) {
      if (e.line() != 1 || e.column() != e.offset() + 1) throw;
      throw SyntaxError(e.detail(), e.offset(), e.expected(), line_no, e.offset() + 1);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::UnknownFunction)
        throw Error(ErrorCode::UnknownFunction, e.message() + " on line " + std::to_string(line_no));
      throw;
    }
  }
};

}  // namespace detail

inline SystemDef parse_system_definition(std::string_view text) {
  std::optional<std::string> name;
  std::vector<std::string> vars;
  std::vector<Expr> rhs;
  SystemParams params;
  std::vector<NonlinearTermDef> terms;

  std::size_t line_no = 0;
  std::size_t begin = 0;
  while (begin <= text.size()) {
    const std::size_t nl = text.find('\n', begin);
    std::string_view raw = text.substr(begin, nl == std::string_view::npos ? std::string_view::npos : nl - begin);
    begin = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const std::size_t comment = raw.find_first_of(";#");
    if (comment != std::string_view::npos) raw = raw.substr(0, comment);

    detail::LineCursor cur{raw, line_no};
    cur.skip_space();
    if (cur.pos >= raw.size()) continue;
    const std::string keyword = cur.identifier("a keyword (system, param, var, term)");

    if (keyword == "system") {
      if (name) cur.fail("duplicate 'system' line");
      name = cur.name("system name");
      cur.expect_end();
    } else if (keyword == "param") {
      const std::size_t at = (cur.skip_space(), cur.pos);
      std::string p = cur.name("parameter name");
      if (params.count(p)) {
        cur.pos = at;
        cur.fail("parameter '" + p + "' defined twice");
      }
      cur.expect('=');
      const std::size_t value_at = (cur.skip_space(), cur.pos);
      Expr value = cur.expression(true);
      if (!free_symbols(value).empty()) {
        cur.pos = value_at;
        cur.fail("parameter value must be a constant", {"number"});
      }
      params[p] = evaluate(value, {});
    } else if (keyword == "var") {
      const std::size_t at = (cur.skip_space(), cur.pos);
      std::string v = cur.name("variable name");
      if (std::find(vars.begin(), vars.end(), v) != vars.end()) {
        cur.pos = at;
        cur.fail("variable '" + v + "' defined twice");
      }
      cur.expect(':');
      vars.push_back(v);
      rhs.push_back(cur.expression(true));
    } else if (keyword == "term") {
      Expr e = cur.expression(false);
      cur.expect_keyword("input");
      std::string input = cur.name("input variable");
      cur.expect_keyword("modulator");
      std::string modulator = cur.name("modulator variable");
      cur.expect_end();
      terms.push_back({e, input, modulator});
    } else {
      cur.pos = 0;
      cur.skip_space();
      cur.fail("unknown keyword '" + keyword + "'", {"system", "param", "var", "term"});
    }
  }
  if (!name) throw SyntaxError("missing 'system <name>' line", 0, {"system"}, 1, 1);
  return SystemDef(*name, std::move(vars), std::move(params), std::move(rhs), std::move(terms), std::string(text));
}

// ---------------------------------------------------------------------------
// Built-in systems, stored as definition text.

inline constexpr std::array<std::pair<std::string_view, std::string_view>, 4> kBuiltinSources{{
    {"rossler_original", R"(system rossler_original
; Rossler system with the original product term f0 = x*z.
param a = 1
param b = 0.2
param c = 0.2
param d = 2.5
var x : -y - z
var y : a*x + b*y
var z : c - d*z + x*z
term x*z input z modulator x
)"},
    {"rossler_v1", R"(system rossler_v1
; Linear modulation of a sigmoidal I/O function: f1 = tanh(x + z).
param a = 1
param b = 0.06
param c = 0.2
param d = 2
var x : -y - z
var y : a*x + b*y
var z : c - d*z + tanh(x + z)
term tanh(x + z) input z modulator x
)"},
    {"rossler_v2", R"(system rossler_v2
; Gain modulation of a sigmoidal I/O function: f2 = tanh(x*z).
param a = 6
param b = 0.03
param c = 1.1
param d = 1.1
var x : -y - z
var y : a*x + b*y
var z : c - d*z + tanh(x*z)
term tanh(x*z) input z modulator x
)"},
    {"fitzhugh_nagumo", R"(system fitzhugh_nagumo
; FitzHugh-Nagumo oscillator; the cubic output is shifted by x.
param I = 0.5
param eps = 0.08
param alpha = 0.7
param beta = 0.8
var z : z - z^3/3 - x + I
var x : eps*(z + alpha - beta*x)
term -z^3/3 - x input z modulator x
)"},
}};

inline std::vector<std::string> builtin_names() {
  std::vector<std::string> out;
  for (const auto& [n, src] : kBuiltinSources) out.emplace_back(n);
  return out;
}

inline std::string_view builtin_source(std::string_view name) {
  for (const auto& [n, src] : kBuiltinSources)
    if (n == name) return src;
  std::string list;
  for (const auto& n : builtin_names()) list += (list.empty() ? "" : ", ") + n;
  throw Error(ErrorCode::UnknownSystem, "unknown system '" + std::string(name) + "'; built-in systems: " + list);
}

inline SystemDef builtin(std::string_view name) { return parse_system_definition(builtin_source(name)); }

// Scales one parameter by (1 + relative_change).
inline SystemDef perturb(const SystemDef& system, std::string_view param, double relative_change) {
  auto it = system.params().find(param);
  if (it == system.params().end())
    throw Error(ErrorCode::UnknownParameter,
                "system '" + system.name() + "' has no parameter '" + std::string(param) + "'");
  if (relative_change == 0.0) return system;
  return system.with_param(param, it->second * (1.0 + relative_change));
}

}  // namespace modphase
