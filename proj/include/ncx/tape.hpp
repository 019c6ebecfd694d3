#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ncx/expr.hpp"

namespace ncx {

/// Ordered set of variable names mapping each to a position in a dense vector.
class VariableIndex {
 public:
  VariableIndex() = default;
  explicit VariableIndex(std::vector<std::string> names);

  std::optional<std::size_t> find(std::string_view name) const;
  std::size_t size() const noexcept { return names_.size(); }
  const std::string& name(std::size_t i) const { return names_[i]; }
  const std::vector<std::string>& names() const noexcept { return names_; }

  std::vector<double> pack(const Assignment& a) const;
  Assignment unpack(std::span<const double> x) const;

 private:
  std::vector<std::string> names_;
  std::map<std::string, std::size_t, std::less<>> position_;
};

using ParamLookup = std::function<std::optional<double>(std::string_view)>;

enum class EvalStatus { Ok, Domain, NonDifferentiable };

/// Flat instruction list for repeated evaluation of one expression at dense
/// points. Parameters are frozen to their values at compile time. Shared
/// subtrees are evaluated once.
class Tape {
 public:
  Tape() = default;

  /// Throws UnboundSymbol for variables outside `vars` or unknown parameters.
  static Tape compile(const Expr& expr, const VariableIndex& vars, const ParamLookup& params);

  /// Throws DomainError.
  double value(std::span<const double> x) const;
  /// Writes the full gradient (size of the variable index) into `grad`.
  /// Throws DomainError or NonDifferentiable.
  double value_and_gradient(std::span<const double> x, std::span<double> grad) const;

  EvalStatus try_value(std::span<const double> x, double& out) const noexcept;
  EvalStatus try_value_and_gradient(std::span<const double> x, double& out,
                                    std::span<double> grad) const noexcept;

  /// Variable positions the expression depends on.
  const std::vector<std::size_t>& support() const noexcept { return support_; }
  std::size_t dimension() const noexcept { return dimension_; }

 private:
  struct Instr {
    NodeKind op;
    std::uint32_t first_arg = 0;
    std::uint32_t n_args = 0;
    double c = 0.0;
    std::size_t var = 0;
  };
  EvalStatus forward(std::span<const double> x, std::vector<double>& slots) const noexcept;

  std::vector<Instr> code_;
  std::vector<std::uint32_t> args_;
  std::vector<std::size_t> support_;
  std::size_t dimension_ = 0;
};

}  // namespace ncx
