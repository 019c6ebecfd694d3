#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ncx/error.hpp"

namespace ncx {

enum class NodeKind { Const, Var, Param, Add, Mul, Div, Pow, Neg, Log, Log2, Exp, Abs, Sqrt };

std::string_view to_string(NodeKind kind);

/// Immutable scalar expression tree. Copies share structure; nodes are never
/// mutated after construction, so values can be read from any thread.
///
/// Indexed families (sums over i = lo..hi) are expanded by the builders into
/// plain n-ary Add nodes, so there is no separate Sum node.
class Expr {
 public:
  /// The constant 0.
  Expr();

  static Expr constant(double value);
  static Expr variable(std::string name);
  static Expr parameter(std::string name);
  /// An empty list yields 0 and a single term yields that term.
  static Expr add(std::vector<Expr> terms);
  /// An empty list yields 1 and a single factor yields that factor.
  static Expr mul(std::vector<Expr> factors);
  /// Throws DomainError when the denominator is the literal constant 0.
  static Expr div(Expr numerator, Expr denominator);
  static Expr pow(Expr base, double exponent);
  static Expr neg(Expr child);
  static Expr log(Expr child);
  static Expr log2(Expr child);
  static Expr exp(Expr child);
  static Expr abs(Expr child);
  static Expr sqrt(Expr child);

  NodeKind kind() const noexcept;
  /// Value of a Const node.
  double value() const noexcept;
  /// Exponent of a Pow node.
  double exponent() const noexcept;
  /// Name of a Var or Param node.
  const std::string& name() const noexcept;
  std::span<const Expr> children() const noexcept;
  const Expr& child(std::size_t i) const { return children()[i]; }

  bool is_const() const noexcept { return kind() == NodeKind::Const; }
  bool is_const(double v) const noexcept { return is_const() && value() == v; }
  /// Identity of the shared node; equal ids imply structural equality.
  const void* id() const noexcept { return node_.get(); }

  friend bool operator==(const Expr& a, const Expr& b);
  friend bool operator!=(const Expr& a, const Expr& b) { return !(a == b); }

 /// Opaque node storage.
  struct Node;

 private:
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr operator+(const Expr& a, double b);
Expr operator+(double a, const Expr& b);
Expr operator-(const Expr& a, double b);
Expr operator-(double a, const Expr& b);
Expr operator*(double a, const Expr& b);
Expr operator*(const Expr& a, double b);

/// Finite real values bound to variable and parameter names.
class Assignment {
 public:
  Assignment() = default;
  Assignment(std::initializer_list<std::pair<const std::string, double>> values);

  /// Throws DomainError on NaN or infinite values.
  void set(const std::string& name, double value);
  std::optional<double> get(std::string_view name) const;
  /// Throws UnboundSymbol when absent.
  double at(std::string_view name) const;
  bool contains(std::string_view name) const { return values_.find(name) != values_.end(); }
  std::size_t size() const noexcept { return values_.size(); }
  /// Bindings of `other` override ours.
  void merge(const Assignment& other);

  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }

  friend bool operator==(const Assignment&, const Assignment&) = default;

 private:
  std::map<std::string, double, std::less<>> values_;
};

/// Partial derivatives keyed by variable name.
using GradientVector = std::map<std::string, double>;

/// Exact value of `expr` under `a`. Throws UnboundSymbol or DomainError; never
/// returns NaN or infinity.
double evaluate(const Expr& expr, const Assignment& a);

/// Partial derivatives with respect to `vars` at `at`. Abs at 0 contributes
/// the subgradient 0; sqrt at 0 and fractional powers below 1 at 0 raise
/// NonDifferentiable.
GradientVector gradient(const Expr& expr, const Assignment& at, const std::set<std::string>& vars);

/// Simultaneous replacement of Var/Param nodes by name. Inserted trees are not
/// themselves rewritten.
Expr substitute(const Expr& expr, const std::map<std::string, Expr>& bindings);

/// Constant folding and removal of additive zeros and multiplicative ones.
/// Idempotent, and evaluation-equivalent wherever the input evaluates.
Expr simplify(const Expr& expr);

std::set<std::string> free_vars(const Expr& expr);
std::set<std::string> free_params(const Expr& expr);

bool contains_kind(const Expr& expr, NodeKind kind);
std::size_t node_count(const Expr& expr);

/// Infix text in the modeling-language syntax; parsing it back yields a
/// structurally equal tree.
std::string to_string(const Expr& expr);

/// Shortest decimal text that round-trips to the same double.
std::string format_number(double v);

}  // namespace ncx
