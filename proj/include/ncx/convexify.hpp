#pragma once

#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "ncx/curvature.hpp"

namespace ncx {

enum class Strategy {
  SCA,
  Substitution,
  BinaryRelaxation,
  RatioRearrange,
  EpigraphLift,
  SDR,
  Lagrangian,
};

std::string_view to_string(Strategy s);

class ConvexificationFailed : public Error {
 public:
  ConvexificationFailed(std::vector<NonconvexComponent> residual, std::string why = {});
  const std::vector<NonconvexComponent>& residual() const noexcept { return residual_; }

 private:
  std::vector<NonconvexComponent> residual_;
};

class Unimplemented : public Error {
 public:
  explicit Unimplemented(Strategy s);
};

class NoStrategy : public Error {
 public:
  explicit NoStrategy(const NonconvexComponent& c);
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class SignUncertifiable : public Error {
 public:
  using Error::Error;
};

struct TransformEntry {
  NonconvexComponent component;
  Strategy strategy;
  Expr before;
  Expr after;
  /// Expansion point, for SCA entries only.
  std::optional<Assignment> reference;
};

struct TransformRecord {
  /// In application order.
  std::vector<TransformEntry> entries;
  /// Present iff some entry is an SCA entry.
  std::optional<Assignment> reference;

  bool empty() const noexcept { return entries.empty(); }
};

struct ConvexifyPolicy {
  /// Linearize only the offending subterms instead of the whole row.
  bool partial_linearization = false;
  /// Replaces the rule-table choice for a component kind.
  std::map<ComponentKind, Strategy> overrides;
  /// Weight of tau/2 * ||x - x0||^2 added to a linearized objective.
  double proximal = 0.0;
  bool allow_epigraph = true;
  /// Change of variables applied to every row before detection.
  std::map<std::string, Expr> substitutions;
  /// Detection and transformation rounds before giving up.
  int max_passes = 4;
};

/// A problem certified by verify_convex, with the record of how it was made.
class ConvexProblem {
 public:
  /// Throws ConvexificationFailed unless verify_convex(problem) holds.
  ConvexProblem(Problem problem, TransformRecord record, std::shared_ptr<const Problem> original);

  const Problem& problem() const noexcept { return problem_; }
  const TransformRecord& record() const noexcept { return record_; }
  const Problem& original() const noexcept { return *original_; }
  std::shared_ptr<const Problem> original_ptr() const noexcept { return original_; }

 private:
  Problem problem_;
  TransformRecord record_;
  std::shared_ptr<const Problem> original_;
};

/// Rule table: integer variables relax, positive-denominator ratio thresholds
/// rearrange, abs terms of a minimized objective lift, everything else is
/// linearized. Throws NoStrategy.
Strategy select_strategy(const NonconvexComponent& comp, const Problem& pb);

/// f(x0) + grad f(x0)^T (x - x0). `x0` must bind every free symbol, parameters
/// included. Throws NonDifferentiable or DomainError.
Expr sca_linearize(const Expr& expr, const Assignment& x0);

/// Binary variables become continuous in [0, 1]; integer variables keep their
/// bounds.
Problem relax_integrality(const Problem& pb);

/// Rewrites gamma - num/den <= 0 as gamma*den - num <= 0 (and num/den - gamma
/// <= 0 as num - gamma*den <= 0). Throws ShapeMismatch or SignUncertifiable
/// when den is not certified positive.
Expr rearrange_ratio(const Expr& con, const SignContext& signs);

/// Box midpoint, lb + 1 or ub - 1 for half-bounded variables, 0 for free
/// ones, then moved 1e-6 inside the box.
Assignment default_reference_point(const Problem& pb);

/// Throws ConvexificationFailed, Unimplemented, UnboundSymbol, BoundViolation.
ConvexProblem convexify_problem(const Problem& pb, const Assignment& x0,
                                const ConvexifyPolicy& policy = {});

}  // namespace ncx
