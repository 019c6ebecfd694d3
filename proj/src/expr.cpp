#include "ncx/expr.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <unordered_map>

#include "ncx/tape.hpp"

namespace ncx {

struct Expr::Node {
  NodeKind kind = NodeKind::Const;
  double value = 0.0;
  std::string name;
  std::vector<Expr> children;
};

namespace {

std::shared_ptr<Expr::Node> make_node(NodeKind kind) {
  auto n = std::make_shared<Expr::Node>();
  n->kind = kind;
  return n;
}

}  // namespace

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::Const: return "const";
    case NodeKind::Var: return "var";
    case NodeKind::Param: return "param";
    case NodeKind::Add: return "add";
    case NodeKind::Mul: return "mul";
    case NodeKind::Div: return "div";
    case NodeKind::Pow: return "pow";
    case NodeKind::Neg: return "neg";
    case NodeKind::Log: return "log";
    case NodeKind::Log2: return "log2";
    case NodeKind::Exp: return "exp";
    case NodeKind::Abs: return "abs";
    case NodeKind::Sqrt: return "sqrt";
  }
  return "?";
}

Expr::Expr() : Expr(constant(0.0)) {}

Expr Expr::constant(double value) {
  if (!std::isfinite(value)) throw DomainError("non-finite constant");
  auto n = make_node(NodeKind::Const);
  n->value = value == 0.0 ? 0.0 : value;
  return Expr(std::move(n));
}

Expr Expr::variable(std::string name) {
  if (name.empty()) throw Error("variable name must be nonempty");
  auto n = make_node(NodeKind::Var);
  n->name = std::move(name);
  return Expr(std::move(n));
}

Expr Expr::parameter(std::string name) {
  if (name.empty()) throw Error("parameter name must be nonempty");
  auto n = make_node(NodeKind::Param);
  n->name = std::move(name);
  return Expr(std::move(n));
}

Expr Expr::add(std::vector<Expr> terms) {
  if (terms.empty()) return constant(0.0);
  if (terms.size() == 1) return std::move(terms.front());
  auto n = make_node(NodeKind::Add);
  n->children = std::move(terms);
  return Expr(std::move(n));
}

Expr Expr::mul(std::vector<Expr> factors) {
  if (factors.empty()) return constant(1.0);
  if (factors.size() == 1) return std::move(factors.front());
  auto n = make_node(NodeKind::Mul);
  n->children = std::move(factors);
  return Expr(std::move(n));
}

Expr Expr::div(Expr numerator, Expr denominator) {
  if (denominator.is_const(0.0)) throw DomainError("division by the constant 0");
  auto n = make_node(NodeKind::Div);
  n->children = {std::move(numerator), std::move(denominator)};
  return Expr(std::move(n));
}

Expr Expr::pow(Expr base, double exponent) {
  if (!std::isfinite(exponent)) throw DomainError("non-finite exponent");
  auto n = make_node(NodeKind::Pow);
  n->value = exponent;
  n->children = {std::move(base)};
  return Expr(std::move(n));
}

namespace {

Expr unary(NodeKind kind, Expr child);

}  // namespace

Expr Expr::neg(Expr child) {
  auto n = make_node(NodeKind::Neg);
  n->children = {std::move(child)};
  return Expr(std::move(n));
}

#define NCX_UNARY(fn, K)                 \
  Expr Expr::fn(Expr child) {            \
    auto n = make_node(NodeKind::K);     \
    n->children = {std::move(child)};    \
    return Expr(std::move(n));           \
  }
NCX_UNARY(log, Log)
NCX_UNARY(log2, Log2)
NCX_UNARY(exp, Exp)
NCX_UNARY(abs, Abs)
NCX_UNARY(sqrt, Sqrt)
#undef NCX_UNARY

NodeKind Expr::kind() const noexcept { return node_->kind; }
double Expr::value() const noexcept { return node_->value; }
double Expr::exponent() const noexcept { return node_->value; }
const std::string& Expr::name() const noexcept { return node_->name; }
std::span<const Expr> Expr::children() const noexcept { return node_->children; }

bool operator==(const Expr& a, const Expr& b) {
  if (a.node_ == b.node_) return true;
  const auto& x = *a.node_;
  const auto& y = *b.node_;
  if (x.kind != y.kind || x.value != y.value || x.name != y.name ||
      x.children.size() != y.children.size())
    return false;
  for (std::size_t i = 0; i < x.children.size(); ++i)
    if (x.children[i] != y.children[i]) return false;
  return true;
}

namespace {

Expr unary(NodeKind kind, Expr child) {
  switch (kind) {
    case NodeKind::Neg: return Expr::neg(std::move(child));
    case NodeKind::Log: return Expr::log(std::move(child));
    case NodeKind::Log2: return Expr::log2(std::move(child));
    case NodeKind::Exp: return Expr::exp(std::move(child));
    case NodeKind::Abs: return Expr::abs(std::move(child));
    case NodeKind::Sqrt: return Expr::sqrt(std::move(child));
    default: throw Error("not a unary kind");
  }
}

/// Rebuilds a node of the same kind with new children.
Expr rebuild(const Expr& e, std::vector<Expr> children) {
  switch (e.kind()) {
    case NodeKind::Add: return Expr::add(std::move(children));
    case NodeKind::Mul: return Expr::mul(std::move(children));
    case NodeKind::Div: return Expr::div(std::move(children[0]), std::move(children[1]));
    case NodeKind::Pow: return Expr::pow(std::move(children[0]), e.exponent());
    case NodeKind::Const:
    case NodeKind::Var:
    case NodeKind::Param: return e;
    default: return unary(e.kind(), std::move(children[0]));
  }
}

}  // namespace

Expr operator+(const Expr& a, const Expr& b) { return Expr::add({a, b}); }
Expr operator-(const Expr& a, const Expr& b) { return Expr::add({a, Expr::neg(b)}); }
Expr operator*(const Expr& a, const Expr& b) { return Expr::mul({a, b}); }
Expr operator/(const Expr& a, const Expr& b) { return Expr::div(a, b); }
Expr operator-(const Expr& a) { return Expr::neg(a); }
Expr operator+(const Expr& a, double b) { return a + Expr::constant(b); }
Expr operator+(double a, const Expr& b) { return Expr::constant(a) + b; }
Expr operator-(const Expr& a, double b) { return a - Expr::constant(b); }
Expr operator-(double a, const Expr& b) { return Expr::constant(a) - b; }
Expr operator*(double a, const Expr& b) { return Expr::constant(a) * b; }
Expr operator*(const Expr& a, double b) { return a * Expr::constant(b); }

// ---------------------------------------------------------------------------
// Assignment

Assignment::Assignment(std::initializer_list<std::pair<const std::string, double>> values) {
  for (const auto& [k, v] : values) set(k, v);
}

void Assignment::set(const std::string& name, double value) {
  if (!std::isfinite(value)) throw DomainError("non-finite value for '" + name + "'");
  values_.insert_or_assign(name, value);
}

std::optional<double> Assignment::get(std::string_view name) const {
  auto it = values_.find(name);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

double Assignment::at(std::string_view name) const {
  auto it = values_.find(name);
  if (it == values_.end()) throw UnboundSymbol(std::string(name));
  return it->second;
}

void Assignment::merge(const Assignment& other) {
  for (const auto& [k, v] : other.values_) values_.insert_or_assign(k, v);
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

double checked(double v, const char* what) {
  if (!std::isfinite(v)) throw DomainError(std::string("non-finite result in ") + what);
  return v;
}

double eval_rec(const Expr& e, const Assignment& a) {
  switch (e.kind()) {
    case NodeKind::Const: return e.value();
    case NodeKind::Var:
    case NodeKind::Param: return a.at(e.name());
    case NodeKind::Add: {
      double s = 0.0;
      for (const auto& c : e.children()) s += eval_rec(c, a);
      return checked(s, "sum");
    }
    case NodeKind::Mul: {
      double p = 1.0;
      for (const auto& c : e.children()) p *= eval_rec(c, a);
      return checked(p, "product");
    }
    case NodeKind::Div: {
      double num = eval_rec(e.child(0), a);
      double den = eval_rec(e.child(1), a);
      if (den == 0.0) throw DomainError("division by zero");
      return checked(num / den, "division");
    }
    case NodeKind::Pow: {
      double b = eval_rec(e.child(0), a);
      double p = e.exponent();
      if (b < 0.0 && p != std::floor(p)) throw DomainError("fractional power of a negative value");
      if (b == 0.0 && p < 0.0) throw DomainError("negative power of zero");
      return checked(std::pow(b, p), "power");
    }
    case NodeKind::Neg: return -eval_rec(e.child(0), a);
    case NodeKind::Log:
    case NodeKind::Log2: {
      double u = eval_rec(e.child(0), a);
      if (u <= 0.0) throw DomainError("logarithm of a non-positive value");
      return e.kind() == NodeKind::Log ? std::log(u) : std::log2(u);
    }
    case NodeKind::Exp: return checked(std::exp(eval_rec(e.child(0), a)), "exp");
    case NodeKind::Abs: return std::fabs(eval_rec(e.child(0), a));
    case NodeKind::Sqrt: {
      double u = eval_rec(e.child(0), a);
      if (u < 0.0) throw DomainError("square root of a negative value");
      return std::sqrt(u);
    }
  }
  throw Error("unknown node kind");
}

}  // namespace

double evaluate(const Expr& expr, const Assignment& a) { return eval_rec(expr, a); }

GradientVector gradient(const Expr& expr, const Assignment& at, const std::set<std::string>& vars) {
  std::set<std::string> names = free_vars(expr);
  names.insert(vars.begin(), vars.end());
  VariableIndex index(std::vector<std::string>(names.begin(), names.end()));
  for (const auto& n : names)
    if (!at.contains(n)) throw UnboundSymbol(n);
  Tape tape = Tape::compile(expr, index, [&](std::string_view n) { return at.get(n); });
  std::vector<double> x = index.pack(at);
  std::vector<double> g(index.size(), 0.0);
  tape.value_and_gradient(x, g);
  GradientVector out;
  for (const auto& v : vars) out[v] = g[*index.find(v)];
  return out;
}

// ---------------------------------------------------------------------------
// Structural transforms

Expr substitute(const Expr& expr, const std::map<std::string, Expr>& bindings) {
  if (bindings.empty()) return expr;
  std::unordered_map<const void*, Expr> memo;
  std::function<Expr(const Expr&)> rec = [&](const Expr& e) -> Expr {
    if (auto it = memo.find(e.id()); it != memo.end()) return it->second;
    Expr out = e;
    if (e.kind() == NodeKind::Var || e.kind() == NodeKind::Param) {
      if (auto b = bindings.find(e.name()); b != bindings.end()) out = b->second;
    } else if (!e.children().empty()) {
      std::vector<Expr> kids;
      kids.reserve(e.children().size());
      bool changed = false;
      for (const auto& c : e.children()) {
        kids.push_back(rec(c));
        changed = changed || kids.back().id() != c.id();
      }
      if (changed) out = rebuild(e, std::move(kids));
    }
    memo.emplace(e.id(), out);
    return out;
  };
  return rec(expr);
}

namespace {

std::optional<double> try_fold(const Expr& e) {
  try {
    return evaluate(e, Assignment{});
  } catch (const Error&) {
    return std::nullopt;
  }
}

Expr s_neg(const Expr& x) {
  if (x.is_const()) return Expr::constant(-x.value());
  if (x.kind() == NodeKind::Neg) return x.child(0);
  return Expr::neg(x);
}

Expr s_add(const std::vector<Expr>& terms) {
  std::vector<Expr> rest;
  double c = 0.0;
  bool has_const = false;
  auto take = [&](const Expr& t) {
    if (t.is_const()) {
      c += t.value();
      has_const = true;
    } else {
      rest.push_back(t);
    }
  };
  for (const auto& t : terms) {
    if (t.kind() == NodeKind::Add) {
      for (const auto& u : t.children()) take(u);
    } else {
      take(t);
    }
  }
  if (has_const && !std::isfinite(c)) return Expr::add(terms);
  std::vector<Expr> out;
  if (c != 0.0 || rest.empty()) out.push_back(Expr::constant(c));
  for (auto& r : rest) out.push_back(std::move(r));
  return Expr::add(std::move(out));
}

Expr s_mul(const std::vector<Expr>& factors) {
  std::vector<Expr> rest;
  double c = 1.0;
  auto take = [&](const Expr& t) {
    if (t.is_const()) {
      c *= t.value();
    } else {
      rest.push_back(t);
    }
  };
  for (const auto& f : factors) {
    if (f.kind() == NodeKind::Mul) {
      for (const auto& u : f.children()) take(u);
    } else {
      take(f);
    }
  }
  if (!std::isfinite(c)) return Expr::mul(factors);
  if (c == 0.0 || rest.empty()) return Expr::constant(c);
  if (c == -1.0 && rest.size() == 1) return s_neg(rest.front());
  std::vector<Expr> out;
  if (c != 1.0) out.push_back(Expr::constant(c));
  for (auto& r : rest) out.push_back(std::move(r));
  return Expr::mul(std::move(out));
}

Expr simplify_rec(const Expr& e, std::unordered_map<const void*, Expr>& memo) {
  if (auto it = memo.find(e.id()); it != memo.end()) return it->second;
  std::vector<Expr> kids;
  for (const auto& c : e.children()) kids.push_back(simplify_rec(c, memo));
  Expr out = e;
  switch (e.kind()) {
    case NodeKind::Const:
    case NodeKind::Var:
    case NodeKind::Param: break;
    case NodeKind::Add: out = s_add(kids); break;
    case NodeKind::Mul: out = s_mul(kids); break;
    case NodeKind::Neg: out = s_neg(kids[0]); break;
    case NodeKind::Div: {
      const Expr& n = kids[0];
      const Expr& d = kids[1];
      if (d.is_const(0.0)) {
        // Keep the unfolded denominator; a literal zero is not representable.
        out = Expr::div(n, e.child(1));
      } else if (d.is_const(1.0)) {
        out = n;
      } else if (n.is_const() && d.is_const()) {
        Expr q = Expr::div(n, d);
        auto v = try_fold(q);
        out = v ? Expr::constant(*v) : q;
      } else {
        out = Expr::div(n, d);
      }
      break;
    }
    case NodeKind::Pow: {
      const Expr& b = kids[0];
      double p = e.exponent();
      if (p == 1.0) {
        out = b;
      } else if (p == 0.0) {
        out = Expr::constant(1.0);
      } else {
        Expr q = Expr::pow(b, p);
        std::optional<double> v = b.is_const() ? try_fold(q) : std::nullopt;
        out = v ? Expr::constant(*v) : q;
      }
      break;
    }
    default: {
      Expr q = unary(e.kind(), kids[0]);
      std::optional<double> v = kids[0].is_const() ? try_fold(q) : std::nullopt;
      out = v ? Expr::constant(*v) : q;
      break;
    }
  }
  memo.emplace(e.id(), out);
  return out;
}

void collect(const Expr& e, NodeKind kind, std::set<std::string>& out) {
  if (e.kind() == kind) out.insert(e.name());
  for (const auto& c : e.children()) collect(c, kind, out);
}

}  // namespace

Expr simplify(const Expr& expr) {
  std::unordered_map<const void*, Expr> memo;
  return simplify_rec(expr, memo);
}

std::set<std::string> free_vars(const Expr& expr) {
  std::set<std::string> out;
  collect(expr, NodeKind::Var, out);
  return out;
}

std::set<std::string> free_params(const Expr& expr) {
  std::set<std::string> out;
  collect(expr, NodeKind::Param, out);
  return out;
}

bool contains_kind(const Expr& expr, NodeKind kind) {
  if (expr.kind() == kind) return true;
  for (const auto& c : expr.children())
    if (contains_kind(c, kind)) return true;
  return false;
}

std::size_t node_count(const Expr& expr) {
  std::size_t n = 1;
  for (const auto& c : expr.children()) n += node_count(c);
  return n;
}

// ---------------------------------------------------------------------------
// Printing. Precedence: 1 additive, 2 multiplicative, 3 unary minus,
// 4 power, 5 atoms and function calls.

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

int level(const Expr& e) {
  switch (e.kind()) {
    case NodeKind::Add: return 1;
    case NodeKind::Mul:
    case NodeKind::Div: return 2;
    case NodeKind::Neg: return 3;
    case NodeKind::Pow: return 4;
    case NodeKind::Const: return e.value() < 0.0 ? 3 : 5;
    default: return 5;
  }
}

void print(const Expr& e, std::string& out);

void print_wrapped(const Expr& e, int min_level, std::string& out) {
  if (level(e) < min_level) {
    out += '(';
    print(e, out);
    out += ')';
  } else {
    print(e, out);
  }
}

void print(const Expr& e, std::string& out) {
  switch (e.kind()) {
    case NodeKind::Const: out += format_number(e.value()); return;
    case NodeKind::Var:
    case NodeKind::Param: out += e.name(); return;
    case NodeKind::Add: {
      bool first = true;
      for (const auto& t : e.children()) {
        if (first) {
          print_wrapped(t, 2, out);
        } else if (t.kind() == NodeKind::Neg) {
          out += " - ";
          print_wrapped(t.child(0), 2, out);
        } else {
          out += " + ";
          print_wrapped(t, 2, out);
        }
        first = false;
      }
      return;
    }
    case NodeKind::Mul: {
      bool first = true;
      for (const auto& f : e.children()) {
        if (!first) out += " * ";
        print_wrapped(f, 3, out);
        first = false;
      }
      return;
    }
    case NodeKind::Div:
      print_wrapped(e.child(0), 2, out);
      out += " / ";
      print_wrapped(e.child(1), 3, out);
      return;
    case NodeKind::Neg: {
      const Expr& c = e.child(0);
      out += '-';
      if (c.is_const() && c.value() >= 0.0) {
        out += '(';
        print(c, out);
        out += ')';
      } else {
        print_wrapped(c, 4, out);
      }
      return;
    }
    case NodeKind::Pow:
      print_wrapped(e.child(0), 5, out);
      out += " ^ ";
      out += format_number(e.exponent());
      return;
    default:
      out += to_string(e.kind());
      out += '(';
      print(e.child(0), out);
      out += ')';
      return;
  }
}

}  // namespace

std::string to_string(const Expr& expr) {
  std::string out;
  print(expr, out);
  return out;
}

}  // namespace ncx
