#include <algorithm>
#include <cmath>

#include "ncx/solve.hpp"

namespace ncx {

namespace {

constexpr double kTauMin = 1e-3;
constexpr double kTauMax = 1e12;

Assignment restrict_to(const Problem& pb, const Assignment& x) {
  Assignment out;
  for (const auto& v : pb.scalar_variables()) out.set(v.name, x.at(v.name));
  return out;
}

Assignment clamp_to_box(const Problem& pb, const Assignment& x) {
  Assignment out;
  for (const auto& v : pb.scalar_variables()) out.set(v.name, std::clamp(x.at(v.name), v.lb, v.ub));
  return out;
}

/// Objective in the minimizing sense; NaN where it cannot be evaluated.
double merit(const Problem& pb, const Assignment& x) {
  try {
    double f = evaluate(pb.objective, pb.bind(x));
    return pb.direction == Direction::Maximize ? -f : f;
  } catch (const Error&) {
    return std::nan("");
  }
}

bool objective_linearized(const TransformRecord& rec) {
  return std::any_of(rec.entries.begin(), rec.entries.end(), [](const TransformEntry& e) {
    return e.strategy == Strategy::SCA && e.component.location.kind == Location::Kind::Objective;
  });
}

}  // namespace

ScaResult sca_solve(const Problem& pb, const SolveOptions& opts, const std::optional<Assignment>& x0,
                    const ConvexifyPolicy& policy) {
  opts.validate();
  ScaResult out;
  Assignment x = clamp_to_box(pb, x0 ? *x0 : default_reference_point(pb));

  if (verify_convex(pb)) {
    ConvexProblem cp(pb, {}, nullptr);
    out.solution = solve(cp, x, opts);
    out.trace.push_back({1, x, out.solution.objective.value_or(0.0), out.solution.objective.value_or(0.0), 0.0, true});
    return out;
  }

  double tau = policy.proximal > 0 ? policy.proximal : 1.0;
  double f_cur = merit(pb, x);
  bool converged = false;
  SolveStatus last = SolveStatus::Optimal;
  int it = 1;
  for (; it <= opts.sca_max_iterations && !converged; ++it) {
    ConvexifyPolicy pol = policy;
    pol.proximal = tau;
    auto cp = convexify_problem(pb, x, pol);
    auto sol = solve(cp, x, opts);
    if (!sol.x) {
      sol.message = "SCA iteration " + std::to_string(it) + ": " + sol.message;
      out.solution = std::move(sol);
      return out;
    }
    last = sol.status;
    Assignment xn = restrict_to(pb, *sol.x);
    double f_new = merit(pb, xn);
    bool moving = cp.record().reference.has_value();
    bool accept = !objective_linearized(cp.record()) || !std::isfinite(f_cur) ||
                  (std::isfinite(f_new) && f_new <= f_cur + 1e-10 * std::max(1.0, std::fabs(f_cur)));
    out.trace.push_back({it, x, sol.objective.value_or(0.0), pb.direction == Direction::Maximize ? -f_new : f_new,
                         tau, accept});
    if (accept) {
      double step = 0.0;
      for (const auto& [name, v] : xn) step = std::max(step, std::fabs(v - x.at(name)));
      bool flat = std::isfinite(f_cur) && std::fabs(f_new - f_cur) <= 1e-10 * std::max(1.0, std::fabs(f_cur));
      x = std::move(xn);
      f_cur = f_new;
      tau = std::max(kTauMin, 0.5 * tau);
      converged = !moving || step <= opts.sca_step_tolerance || flat;
    } else {
      tau *= 2.0;
      // No improving step at any weight: x is stationary for the surrogate family.
      converged = tau > kTauMax;
    }
  }

  Solution sol;
  sol.x = x;
  sol.iterations = it - 1;
  sol.objective = evaluate(pb.objective, pb.bind(x));
  auto r = feasibility_residuals(pb, x);
  sol.residuals.max_ineq = r.max_ineq;
  sol.residuals.max_eq = r.max_eq;
  bool feasible = r.max_ineq <= 1e-6 && r.max_eq <= 1e-6;
  sol.status = converged && feasible && last == SolveStatus::Optimal ? SolveStatus::Optimal : SolveStatus::MaxIterations;
  if (!converged) sol.message = "SCA iteration cap reached";
  out.solution = std::move(sol);
  return out;
}

}  // namespace ncx
