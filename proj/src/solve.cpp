#include <algorithm>
#include <cmath>

#include "solver_internal.hpp"

namespace ncx {

namespace {

constexpr std::string_view kScripts[] = {"cvxpy", "scipy", "gurobi"};

bool all_affine(const Problem& pb) {
  auto affine = [](const Expr& e) {
    auto c = curvature_of(e);
    return c == Curvature::Affine || c == Curvature::Constant;
  };
  if (!affine(pb.objective)) return false;
  for (const auto& r : pb.ineq)
    if (!affine(r.expr)) return false;
  for (const auto& r : pb.eq)
    if (!affine(r.expr)) return false;
  return true;
}

}  // namespace

BackendId BackendId::script(std::string name) {
  if (std::find(std::begin(kScripts), std::end(kScripts), name) == std::end(kScripts))
    throw UnsupportedBackend("unknown script backend '" + name + "'");
  return BackendId(Kind::Script, std::move(name));
}

BackendId BackendId::parse(std::string_view text) {
  if (text == "internal-affine") return internal_affine();
  if (text == "internal-barrier") return internal_barrier();
  if (text.starts_with("script:")) return script(std::string(text.substr(7)));
  return script(std::string(text));
}

std::string BackendId::to_string() const {
  switch (kind_) {
    case Kind::InternalAffine: return "internal-affine";
    case Kind::InternalBarrier: return "internal-barrier";
    case Kind::Script: return "script:" + name_;
  }
  return "?";
}

void SolveOptions::validate() const {
  if (!(tolerance > 0) || !(sca_step_tolerance > 0) || !(mu0 > 0) || !(initial_step > 0))
    throw Error("solver tolerances must be positive");
  if (!(mu_shrink > 0 && mu_shrink < 1)) throw Error("barrier shrink factor must lie in (0, 1)");
  if (!(backtrack > 0 && backtrack < 1) || !(armijo > 0 && armijo < 1))
    throw Error("line search parameters must lie in (0, 1)");
  if (max_iterations < 1 || sca_max_iterations < 1) throw Error("iteration caps must be at least 1");
}

std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::MaxIterations: return "MaxIterations";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::NumericalFailure: return "NumericalFailure";
  }
  return "?";
}

BackendId select_backend(const ConvexProblem& pc, const std::optional<std::string>& prefer_script) {
  if (prefer_script) return BackendId::script(*prefer_script);
  return all_affine(pc.problem()) ? BackendId::internal_affine() : BackendId::internal_barrier();
}

Solution solve(const ConvexProblem& pc, const Assignment& x0, const SolveOptions& opts) {
  return solve_with(select_backend(pc), pc, x0, opts);
}

Solution solve_with(const BackendId& backend, const ConvexProblem& pc, const Assignment& x0,
                    const SolveOptions& opts) {
  opts.validate();
  switch (backend.kind()) {
    case BackendId::Kind::InternalAffine:
      return detail::solve_affine(pc.problem(), opts);
    case BackendId::Kind::InternalBarrier:
      return detail::solve_barrier(pc.problem(), x0, opts);
    case BackendId::Kind::Script:
      break;
  }
  throw UnsupportedBackend(backend.to_string() + " is emission-only");
}

Residuals feasibility_residuals(const Problem& pb, const Assignment& x) {
  Residuals r;
  Assignment at = pb.bind(x);
  for (const auto& c : pb.ineq) r.max_ineq = std::max(r.max_ineq, evaluate(c.expr, at));
  for (const auto& v : pb.scalar_variables()) {
    double xv = x.at(v.name);
    r.max_ineq = std::max({r.max_ineq, v.lb - xv, xv - v.ub});
  }
  for (const auto& c : pb.eq) r.max_eq = std::max(r.max_eq, std::fabs(evaluate(c.expr, at)));
  return r;
}

namespace detail {

Compiled::Compiled(const Problem& pb) : index(pb.variable_index()), maximize(pb.direction == Direction::Maximize) {
  for (const auto& v : pb.scalar_variables()) {
    lb.push_back(v.lb);
    ub.push_back(v.ub);
  }
  auto params = pb.param_lookup();
  f = Tape::compile(maximize ? Expr::neg(pb.objective) : pb.objective, index, params);
  for (const auto& r : pb.ineq) g.push_back(Tape::compile(r.expr, index, params));
  for (const auto& r : pb.eq) h.push_back(Tape::compile(r.expr, index, params));
}

AffineRow affine_row(const Tape& t, std::size_t n) {
  AffineRow row;
  row.a.assign(n, 0.0);
  std::vector<double> zero(n, 0.0);
  row.c = t.value_and_gradient(zero, row.a);
  return row;
}

std::vector<double> interior_start(const Compiled& c, const Assignment& x0) {
  std::vector<double> x(c.n());
  for (std::size_t k = 0; k < c.n(); ++k) {
    double lo = c.lb[k], hi = c.ub[k];
    double v = x0.get(c.index.name(k)).value_or(std::isfinite(lo) && std::isfinite(hi) ? 0.5 * (lo + hi)
                                                : std::isfinite(lo)                      ? lo + 1.0
                                                : std::isfinite(hi)                      ? hi - 1.0
                                                                                         : 0.0);
    double width = std::isfinite(lo) && std::isfinite(hi) ? hi - lo : kInf;
    double inset = std::min(1e-3 * std::max(1.0, std::fabs(v)), 0.25 * width);
    if (std::isfinite(lo) && v < lo + inset) v = lo + inset;
    if (std::isfinite(hi) && v > hi - inset) v = hi - inset;
    x[k] = v;
  }
  return x;
}

void finish_solution(const Problem& pb, Solution& sol) {
  if (!sol.x) return;
  Assignment at = pb.bind(*sol.x);
  sol.objective = evaluate(pb.objective, at);
  auto r = feasibility_residuals(pb, *sol.x);
  sol.residuals.max_ineq = r.max_ineq;
  sol.residuals.max_eq = r.max_eq;
}

}  // namespace detail

}  // namespace ncx
