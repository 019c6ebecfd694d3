#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ncx/convexify.hpp"

namespace ncx {

/// internal-affine, internal-barrier or script:<name>.
class BackendId {
 public:
  enum class Kind { InternalAffine, InternalBarrier, Script };

  static BackendId internal_affine() { return BackendId(Kind::InternalAffine, {}); }
  static BackendId internal_barrier() { return BackendId(Kind::InternalBarrier, {}); }
  /// Throws UnsupportedBackend for names outside cvxpy, scipy, gurobi.
  static BackendId script(std::string name);
  /// Accepts the forms produced by to_string.
  static BackendId parse(std::string_view text);

  Kind kind() const noexcept { return kind_; }
  const std::string& script_name() const noexcept { return name_; }
  bool is_script() const noexcept { return kind_ == Kind::Script; }
  std::string to_string() const;

  friend bool operator==(const BackendId&, const BackendId&) = default;

 private:
  BackendId(Kind k, std::string name) : kind_(k), name_(std::move(name)) {}
  Kind kind_;
  std::string name_;
};

class UnsupportedBackend : public Error {
 public:
  using Error::Error;
};

class UnsupportedAtom : public Error {
 public:
  UnsupportedAtom(std::string backend, NodeKind kind)
      : Error("backend " + backend + " does not support " + std::string(ncx::to_string(kind))),
        backend_(std::move(backend)),
        kind_(kind) {}
  const std::string& backend() const noexcept { return backend_; }
  NodeKind kind() const noexcept { return kind_; }

 private:
  std::string backend_;
  NodeKind kind_;
};

struct SolveOptions {
  /// Inner iterations per barrier stage, pivots for the simplex path.
  int max_iterations = 2000;
  /// KKT-proxy tolerance.
  double tolerance = 1e-8;
  double mu0 = 10.0;
  double mu_shrink = 0.1;
  /// Length of the first line-search trial, in the infinity norm.
  double initial_step = 1.0;
  double backtrack = 0.5;
  double armijo = 1e-4;
  int sca_max_iterations = 200;
  double sca_step_tolerance = 1e-7;
  std::uint64_t seed = 0;

  /// Throws Error on non-positive tolerances or caps below 1.
  void validate() const;
};

enum class SolveStatus { Optimal, MaxIterations, Infeasible, NumericalFailure };

std::string_view to_string(SolveStatus s);

struct Residuals {
  double max_ineq = 0.0;
  double max_eq = 0.0;
  double stationarity = 0.0;
};

struct Solution {
  SolveStatus status = SolveStatus::NumericalFailure;
  /// Present iff status is Optimal or MaxIterations.
  std::optional<Assignment> x;
  /// Objective in the problem's own direction; present with x.
  std::optional<double> objective;
  int iterations = 0;
  Residuals residuals;
  std::string message;

  bool has_point() const noexcept { return x.has_value(); }
};

/// All-affine problems go to the simplex path, everything else to the
/// barrier; a preferred script name wins.
BackendId select_backend(const ConvexProblem& pc, const std::optional<std::string>& prefer_script = {});

/// Solves on the internal backend chosen by select_backend. `x0` is moved
/// inside the box when it is not strictly inside.
Solution solve(const ConvexProblem& pc, const Assignment& x0, const SolveOptions& opts = {});

/// Same, forcing one internal backend. Throws UnsupportedBackend for scripts.
Solution solve_with(const BackendId& backend, const ConvexProblem& pc, const Assignment& x0,
                    const SolveOptions& opts = {});

/// Largest violation of g <= 0, |h| and the box at `x`, per kind.
Residuals feasibility_residuals(const Problem& pb, const Assignment& x);

struct ScaStep {
  int iteration = 0;
  Assignment reference;
  /// Surrogate objective at its minimizer.
  double surrogate = 0.0;
  /// Original objective at the new point.
  double objective = 0.0;
  double tau = 0.0;
  bool accepted = true;
};

struct ScaResult {
  Solution solution;
  std::vector<ScaStep> trace;
};

/// Re-linearizes at the current point, solves, and moves until the step is
/// below opts.sca_step_tolerance. A proximal weight keeps steps from
/// overshooting and doubles whenever the original objective does not improve.
ScaResult sca_solve(const Problem& pb, const SolveOptions& opts = {},
                    const std::optional<Assignment>& x0 = {},
                    const ConvexifyPolicy& policy = {});

/// Script text for cvxpy, scipy or gurobi. Throws UnsupportedBackend or
/// UnsupportedAtom.
std::string emit_script(const ConvexProblem& pc, const BackendId& backend);

}  // namespace ncx
