#include <algorithm>
#include <cmath>

#include "ncx/pipeline.hpp"

namespace ncx {

double FeasibilityReport::max_violation() const {
  double m = 0.0;
  for (double v : ineq) m = std::max(m, v);
  for (double v : eq) m = std::max(m, v);
  for (const auto& [_, v] : variables) m = std::max(m, v);
  return m;
}

FeasibilityReport check_feasibility(const Problem& pb, const Assignment& x, double eps) {
  FeasibilityReport rep;
  rep.tolerance = eps;
  auto vars = pb.scalar_variables();
  for (const auto& v : vars) x.at(v.name);
  Assignment at = pb.bind(x);

  auto row = [&](const Constraint& c, const char* kind, std::size_t i, bool equality) {
    try {
      double g = evaluate(c.expr, at);
      return equality ? std::fabs(g) : std::max(0.0, g);
    } catch (const Error& e) {
      rep.diagnostics.push_back(std::string(kind) + " " + std::to_string(i + 1) + " (" + c.group +
                                "): " + e.what());
      return kInf;
    }
  };
  for (std::size_t i = 0; i < pb.ineq.size(); ++i) rep.ineq.push_back(row(pb.ineq[i], "inequality", i, false));
  for (std::size_t j = 0; j < pb.eq.size(); ++j) rep.eq.push_back(row(pb.eq[j], "equality", j, true));

  for (const auto& v : vars) {
    double xv = x.at(v.name);
    double gap = std::max({0.0, v.lb - xv, xv - v.ub});
    if (v.kind != VarKind::Continuous) gap = std::max(gap, std::fabs(xv - std::round(xv)));
    if (gap > 0) rep.variables[v.name] = gap;
  }
  rep.feasible = rep.max_violation() <= eps;
  return rep;
}

namespace {

/// -(sum_i v_i grad g_i + sum_j h_j grad h_j) at x.
GradientVector violation_direction(const Problem& pb, const Assignment& x, const FeasibilityReport& rep) {
  Assignment at = pb.bind(x);
  std::set<std::string> names;
  for (const auto& v : pb.scalar_variables()) names.insert(v.name);
  GradientVector dir;
  for (const auto& n : names) dir[n] = 0.0;
  auto accumulate = [&](const Expr& e, double weight) {
    for (const auto& [n, g] : gradient(e, at, names)) dir[n] -= weight * g;
  };
  for (std::size_t i = 0; i < pb.ineq.size(); ++i)
    if (rep.ineq[i] > 0 && std::isfinite(rep.ineq[i])) accumulate(pb.ineq[i].expr, rep.ineq[i]);
  for (std::size_t j = 0; j < pb.eq.size(); ++j)
    if (rep.eq[j] > 0) accumulate(pb.eq[j].expr, evaluate(pb.eq[j].expr, at));
  return dir;
}

Assignment step_clipped(const Problem& pb, const Assignment& x, const GradientVector& dir, double alpha) {
  Assignment out;
  for (const auto& v : pb.scalar_variables())
    out.set(v.name, std::clamp(x.at(v.name) + alpha * dir.at(v.name), v.lb, v.ub));
  return out;
}

double squared_violation(const FeasibilityReport& rep) {
  double s = 0.0;
  for (double v : rep.ineq) s += v * v;
  for (double v : rep.eq) s += v * v;
  for (const auto& [_, v] : rep.variables) s += v * v;
  return s;
}

}  // namespace

Assignment fdc_stage1(const Assignment& x0, const FeasibilityReport& rep, const Problem& pb, int l,
                      double alpha) {
  if (rep.feasible) throw Error("feasibility correction needs an infeasible point");
  if (l < 1 || !(alpha > 0 && alpha <= 1)) throw Error("FDC step needs l >= 1 and alpha in (0, 1]");
  auto dir = violation_direction(pb, x0, rep);
  bool moving = std::any_of(dir.begin(), dir.end(), [](const auto& kv) { return kv.second != 0.0; });
  if (!moving) throw ZeroDirection("every violated constraint has a vanishing gradient at the current point");
  return step_clipped(pb, x0, dir, alpha);
}

Assignment restore_point(const Problem& pb, const Assignment& x0, double eps, int max_iter) {
  Assignment x = x0;
  auto rep = check_feasibility(pb, x, eps);
  double merit = squared_violation(rep);
  for (int it = 0; it < max_iter && !rep.feasible && std::isfinite(merit); ++it) {
    GradientVector dir;
    try {
      dir = violation_direction(pb, x, rep);
    } catch (const Error&) {
      break;
    }
    bool improved = false;
    for (double alpha = 1.0; alpha > 1e-12; alpha *= 0.5) {
      Assignment trial = step_clipped(pb, x, dir, alpha);
      auto trial_rep = check_feasibility(pb, trial, eps);
      double m = squared_violation(trial_rep);
      if (m < merit) {
        x = std::move(trial);
        rep = std::move(trial_rep);
        merit = m;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  return x;
}

}  // namespace ncx
