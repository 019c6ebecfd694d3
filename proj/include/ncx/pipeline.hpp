#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ncx/gateway.hpp"
#include "ncx/model_io.hpp"
#include "ncx/solve.hpp"

namespace ncx {

struct PipelineConfig {
  /// Error-correction iterations K.
  int max_ecl = 3;
  /// Feasibility-correction iterations L.
  int max_fdc = 6;
  double feasibility_tol = 1e-6;
  /// Step size for FDC iteration l (1-based); 1/(l+1) past the end.
  std::vector<double> alpha;
  bool disable_convexify = false;
  bool disable_ecl = false;
  bool disable_fdc = false;
  SolveOptions solve;
  ConvexifyPolicy policy;
  /// Needed for description input and for repairs outside the registry.
  std::shared_ptr<ModelGateway> gateway;
  int extraction_rounds = 3;
  /// Initial point; unset entries come from default_reference_point.
  Assignment x0;

  double alpha_at(int l) const;
  /// Throws Error when K or L is negative, the tolerance is not positive, or a
  /// step size lies outside (0, 1].
  void validate() const;
};

enum class ErrorClass {
  ParseError,
  UnboundSymbol,
  ConvexificationFailed,
  SolverNumericalFailure,
  SolverInfeasible,
  GatewayError,
};

std::string_view to_string(ErrorClass c);

struct ErrorReport {
  ErrorClass error_class = ErrorClass::ParseError;
  std::string stage;
  /// ECL iteration that produced it; 0 for the first attempt.
  int iteration = 0;
  std::string message;
  std::map<std::string, std::string> payload;

  /// One-line text handed to the repair prompt.
  std::string describe() const;
};

struct FeasibilityReport {
  bool feasible = false;
  /// max(0, g_i(x)) per inequality row.
  std::vector<double> ineq;
  /// |h_j(x)| per equality row.
  std::vector<double> eq;
  /// Bound and integrality violations keyed by scalar variable name.
  std::map<std::string, double> variables;
  double tolerance = 0.0;
  std::vector<std::string> diagnostics;

  double max_violation() const;
};

/// Original rows, bounds and integrality at `x`. Evaluation errors count as
/// infeasible. Throws UnboundSymbol when `x` misses a variable.
FeasibilityReport check_feasibility(const Problem& pb, const Assignment& x, double eps);

struct RepairAction {
  enum class Kind { BindDefault, EscalateSca, ShrinkStep, FiniteBox, Restore, Restart, NoRepair };
  Kind kind = Kind::NoRepair;
  std::string symbol;
  double value = 0.0;
  /// Step factor for ShrinkStep, radius for FiniteBox.
  double amount = 0.0;
  Assignment x0;
  /// "registry" or "gateway".
  std::string source = "registry";
  std::string note;

  std::string describe() const;
};

std::string_view to_string(RepairAction::Kind k);

/// Mutable solve state the repairs act on.
struct EclState {
  Problem problem;
  Assignment x0;
  SolveOptions solve;
  ConvexifyPolicy policy;
  bool use_sca = false;
  bool restored = false;
  bool convexify_disabled = false;
};

/// Registry first, then the gateway's suggestion, else NoRepair.
RepairAction ecl_repair(const ErrorReport& err, const EclState& state, ModelGateway* gateway);

/// Applies `a` to `state`; returns false for NoRepair.
bool apply_repair(const RepairAction& a, EclState& state);

/// Box radius used when infinite bounds are tightened.
inline constexpr double kFiniteBoxRadius = 1e3;

class ZeroDirection : public Error {
 public:
  using Error::Error;
};

/// x0 - alpha * (sum_i v_i grad g_i(x0) + sum_j h_j(x0) grad h_j(x0)), with v
/// taken from `rep` and the result clipped to the box. Throws ZeroDirection.
Assignment fdc_stage1(const Assignment& x0, const FeasibilityReport& rep, const Problem& pb, int l,
                      double alpha);

/// Backtracking descent on the squared violations from `x0`, staying in the
/// box; returns the best point found.
Assignment restore_point(const Problem& pb, const Assignment& x0, double eps, int max_iter = 100);

enum class LadderRung { PartialSca, EpigraphLift, ScaHandoff };

std::string_view to_string(LadderRung r);

struct Stage2Plan {
  LadderRung rung;
  /// Surrogate built at x_prev; for the handoff, the problem sca_solve starts from.
  ConvexProblem problem;
};

/// Rung (l - floor(L/2) - 1) of the applicable ladder, built at `x_prev`.
/// Throws ConvexificationFailed when the ladder is exhausted.
Stage2Plan fdc_stage2(const Problem& pb, const Assignment& x_prev, int l, int L,
                      const ConvexifyPolicy& base = {});

struct EclEntry {
  ErrorReport error;
  RepairAction repair;
};

struct FdcEntry {
  int stage = 1;
  int l = 0;
  double alpha = 0.0;
  /// Stage 1: the moved initial point. Stage 2: the reference point.
  Assignment x0;
  std::optional<LadderRung> rung;
  std::vector<std::string> transforms;
  bool feasible = false;
  double max_violation = 0.0;
  std::string error;
};

struct StageTimings {
  double formulate = 0.0;
  double convexify = 0.0;
  double solve = 0.0;
  double feasibility = 0.0;
  double ecl = 0.0;
  double fdc = 0.0;
};

struct PipelineResult {
  bool success_flag = false;
  bool execute_flag = false;
  std::optional<Assignment> x;
  std::optional<double> objective;
  std::optional<ConvexProblem> convex;
  std::optional<Problem> problem;
  std::optional<FeasibilityReport> feasibility;
  std::vector<EclEntry> ecl_trace;
  std::vector<FdcEntry> fdc_trace;
  /// Seconds per stage.
  StageTimings timings;
  std::optional<ConsistencyReport> consistency;
  std::optional<BackendId> backend;
  std::vector<std::string> diagnostics;
};

using PipelineInput = std::variant<Problem, NlDescription>;

/// Never throws for run-time failures; they are recorded in the result.
/// Throws Error only for an invalid configuration.
PipelineResult run(const PipelineInput& input, const PipelineConfig& cfg);

/// Canonical JSON report.
std::string report_json(const PipelineResult& r);

}  // namespace ncx
