#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ncx/expr.hpp"
#include "ncx/tape.hpp"

namespace ncx {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Direction { Minimize, Maximize };
enum class VarKind { Continuous, Integer, Binary };

std::string_view to_string(Direction d);
std::string_view to_string(VarKind k);

/// Declared variable or indexed family of variables sharing kind and bounds.
struct VarDecl {
  std::string name;
  VarKind kind = VarKind::Continuous;
  double lb = -kInf;
  double ub = kInf;
  /// Empty for a scalar; one extent per index otherwise (1-based indices).
  std::vector<int> shape;

  /// Scalar names in row-major order: "p[1]", "p[2]", ... or just "p".
  std::vector<std::string> scalar_names() const;
  bool discrete() const noexcept { return kind != VarKind::Continuous; }

  /// Throws BoundViolation when lb > ub, binary bounds are not {0,1}, or an
  /// extent is below 1.
  void validate() const;

  friend bool operator==(const VarDecl&, const VarDecl&) = default;
};

struct ParamDecl {
  std::string name;
  std::vector<int> shape;
  /// Row-major values; absent when declared without a value.
  std::optional<std::vector<double>> values;

  std::vector<std::string> scalar_names() const;

  friend bool operator==(const ParamDecl&, const ParamDecl&) = default;
};

/// One constraint row. Rows expanded from the same source statement share a
/// group label.
struct Constraint {
  Expr expr;
  std::string group;

  friend bool operator==(const Constraint&, const Constraint&) = default;
};

/// Scalar view of a declared variable.
struct ScalarVar {
  std::string name;
  std::string family;
  VarKind kind;
  double lb;
  double ub;
};

/// optimize f(x) subject to g_i(x) <= 0, h_j(x) = 0, x in the declared box.
struct Problem {
  std::string name = "problem";
  Direction direction = Direction::Minimize;
  Expr objective;
  std::vector<Constraint> ineq;
  std::vector<Constraint> eq;
  std::vector<VarDecl> variables;
  std::vector<ParamDecl> parameters;

  std::size_t m() const noexcept { return ineq.size(); }
  std::size_t p() const noexcept { return eq.size(); }

  std::vector<ScalarVar> scalar_variables() const;
  VariableIndex variable_index() const;
  const VarDecl* find_family(std::string_view name) const;
  VarDecl* find_family(std::string_view name);
  /// Family declaration owning a scalar name such as "p[3]".
  const VarDecl* family_of(std::string_view scalar) const;
  const ParamDecl* find_param(std::string_view name) const;

  /// Value of a scalar parameter name such as "N0" or "G[2]".
  std::optional<double> param_value(std::string_view scalar) const;
  ParamLookup param_lookup() const;
  /// Assignment holding every valued scalar parameter.
  Assignment param_assignment() const;

  /// Parameter binding with `x` merged on top.
  Assignment bind(const Assignment& x) const;

  /// Adds or overwrites a scalar parameter value.
  void set_param(const std::string& name, double value);

  friend bool operator==(const Problem&, const Problem&) = default;
};

}  // namespace ncx
