// Reference computations shared by the unit tests and the acceptance run.
// Nothing here calls into the solver, the convexifier or the pipeline.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ncx/expr.hpp"

namespace oracle {

using ncx::Expr;

/// Smooth expressions over x1..x3 that stay finite on [0.5, 2]^3.
class ExprGen {
 public:
  explicit ExprGen(std::uint64_t seed) : rng_(seed) {}

  /// Positive-valued tree, optionally wrapped in a difference at the top.
  Expr smooth(int depth) {
    if (coin(0.3)) return positive(depth) - positive(depth - 1);
    return positive(depth);
  }

  /// Trees built from convexity-preserving compositions; some of them are
  /// certifiable, the rest exercise the "unknown" answer.
  Expr dcp_like(int depth) {
    if (depth <= 0) return affine();
    switch (pick(9)) {
      case 0: return dcp_like(depth - 1) + dcp_like(depth - 1);
      case 1: return uniform(0.1, 3.0) * dcp_like(depth - 1);
      case 2: return Expr::exp(0.3 * affine());
      case 3: return Expr::pow(affine(), 2.0);
      case 4: return Expr::abs(affine());
      case 5: return -Expr::log(positive_affine());
      case 6: return Expr::pow(positive_affine(), -1.0);
      case 7: return -Expr::sqrt(positive_affine());
      default: return Expr::exp(0.2 * dcp_like(depth - 1));
    }
  }

  std::vector<std::string> names() const { return {"x1", "x2", "x3"}; }

 private:
  Expr leaf() {
    if (coin(0.25)) return Expr::constant(uniform(0.5, 3.0));
    return Expr::variable("x" + std::to_string(pick(3) + 1));
  }

  Expr positive(int depth) {
    if (depth <= 0) return leaf();
    switch (pick(8)) {
      case 0: return positive(depth - 1) + positive(depth - 1);
      case 1: return positive(depth - 1) * positive(depth - 1);
      case 2: return Expr::div(positive(depth - 1), positive(depth - 1));
      case 3: return Expr::pow(positive(depth - 1), std::round(uniform(-2.0, 3.0) * 2.0) / 2.0 + 0.25);
      case 4: return Expr::exp(0.25 * Expr::log(positive(depth - 1)));
      case 5: return Expr::log(1.0 + positive(depth - 1));
      case 6: return Expr::sqrt(positive(depth - 1));
      default: return Expr::log2(2.0 + positive(depth - 1));
    }
  }

  Expr affine() {
    Expr e = Expr::constant(uniform(-1.0, 1.0));
    for (int i = 1; i <= 3; ++i)
      if (coin(0.6)) e = e + uniform(-2.0, 2.0) * Expr::variable("x" + std::to_string(i));
    return e;
  }

  /// Positive on [0.5, 2]^3: nonnegative weights plus a positive offset.
  Expr positive_affine() {
    Expr e = Expr::constant(uniform(0.1, 1.0));
    for (int i = 1; i <= 3; ++i)
      if (coin(0.6)) e = e + uniform(0.1, 2.0) * Expr::variable("x" + std::to_string(i));
    return e;
  }

  bool coin(double p) { return std::bernoulli_distribution(p)(rng_); }
  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }
  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng_); }

  std::mt19937_64 rng_;
};

/// Central difference with a step scaled to |x|.
inline std::vector<double> central_difference(const std::function<double(const std::vector<double>&)>& f,
                                              std::vector<double> x, double rel_step = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double h = rel_step * std::max(1.0, std::fabs(x[i]));
    double xi = x[i];
    x[i] = xi + h;
    double fp = f(x);
    x[i] = xi - h;
    double fm = f(x);
    x[i] = xi;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

struct AnalyticCase {
  std::string name;
  std::string text;
  double value;
  /// Expected point, by scalar name.
  std::vector<std::pair<std::string, double>> x;
};

/// Convex problems whose optimum follows from the KKT conditions by hand.
inline std::vector<AnalyticCase> analytic_cases() {
  const double ln2 = std::log(2.0);
  return {
      {"shifted square", "var x continuous in [-10, 10]\nminimize (x - 3)^2", 0.0, {{"x", 3.0}}},
      {"clipped square", "var x continuous in [0, 1]\nminimize (x - 3)^2", 4.0, {{"x", 1.0}}},
      {"two-row lp",
       "var x continuous in [0, 10]\nvar y continuous in [0, 10]\nmaximize 3*x + 2*y\nsubject to\n"
       "  a: x + y <= 4\n  b: x + 3*y <= 6",
       12.0,
       {{"x", 4.0}, {"y", 0.0}}},
      {"halfplane projection",
       "var x continuous\nvar y continuous\nminimize x^2 + y^2\nsubject to\n  h: x + y >= 2", 2.0,
       {{"x", 1.0}, {"y", 1.0}}},
      {"line projection", "var x continuous\nvar y continuous\nminimize x^2 + y^2\nsubject to\n  h: x + y == 1",
       0.5, {{"x", 0.5}, {"y", 0.5}}},
      {"cosh", "var x continuous\nminimize exp(x) + exp(-x)", 2.0, {{"x", 0.0}}},
      {"log utility",
       "var x continuous in [0.01, 10]\nvar y continuous in [0.01, 10]\nmaximize log(x) + log(y)\nsubject to\n"
       "  b: x + y <= 2",
       0.0,
       {{"x", 1.0}, {"y", 1.0}}},
      {"sqrt cap", "var x continuous in [0, 10]\nmaximize sqrt(x)\nsubject to\n  c: x <= 4", 2.0, {{"x", 4.0}}},
      {"reciprocal", "var x continuous in [0.1, 10]\nminimize x + x^-1", 2.0, {{"x", 1.0}}},
      {"plane projection",
       "var x[3] continuous\nminimize (x[1] - 1)^2 + (x[2] - 2)^2 + (x[3] - 3)^2\nsubject to\n"
       "  s: x[1] + x[2] + x[3] == 3",
       3.0,
       {{"x[1]", 0.0}, {"x[2]", 1.0}, {"x[3]", 2.0}}},
      {"two rates",
       "var x continuous in [0, 5]\nvar y continuous in [0, 5]\nmaximize log2(1 + x) + log2(1 + y)\nsubject to\n"
       "  b: x + y <= 2",
       2.0,
       {{"x", 1.0}, {"y", 1.0}}},
      {"equality lp",
       "var x continuous in [0, 2]\nvar y continuous in [0, 5]\nminimize x + 2*y\nsubject to\n  e: x + y == 3",
       4.0,
       {{"x", 2.0}, {"y", 1.0}}},
      {"exp tilt", "var x continuous\nminimize exp(x) - 2*x", 2.0 - 2.0 * ln2, {{"x", ln2}}},
      {"water filling",
       "param n = [0.5, 1, 1.5]\nvar x[3] continuous in [0, 10]\n"
       "maximize sum(log(1 + x[i] / n[i]), i, 1, 3)\nsubject to\n  total: sum(x[i], i, 1, 3) == 3",
       std::log(4.0) + std::log(2.0) + std::log(4.0 / 3.0),
       {{"x[1]", 1.5}, {"x[2]", 1.0}, {"x[3]", 0.5}}},
      {"coupled quadratic", "var x continuous\nvar y continuous\nminimize (x - y)^2 + (y - 1)^2 + x^2", 1.0 / 3.0,
       {{"x", 1.0 / 3.0}, {"y", 2.0 / 3.0}}},
      {"bounded lp", "var x continuous in [0, 5]\nminimize x\nsubject to\n  f: x >= 1.5", 1.5, {{"x", 1.5}}},
      {"concave parabola", "var x continuous in [0, 1]\nmaximize 4*x - x^2", 3.0, {{"x", 1.0}}},
      {"exp pair",
       "var x continuous in [-5, 5]\nvar y continuous in [-5, 5]\nminimize exp(x) + exp(y)\nsubject to\n"
       "  s: x + y >= 2",
       2.0 * std::exp(1.0),
       {{"x", 1.0}, {"y", 1.0}}},
      {"disc cut", "var x continuous in [-5, 5]\nminimize (x - 2)^2\nsubject to\n  d: x^2 <= 1", 1.0, {{"x", 1.0}}},
      {"disc corner",
       "var x continuous in [-5, 5]\nvar y continuous in [-5, 5]\nminimize x + y\nsubject to\n"
       "  d: x^2 + y^2 <= 2",
       -2.0,
       {{"x", -1.0}, {"y", -1.0}}},
  };
}

/// Scalar model of the seeded square-cut family: maximize x on [0, ub]
/// subject to x^2 - 4 <= 0, started from the tangent cut at ub/2.
struct ScalarCutFamily {
  double ub;
  /// Surrogate optimum for a cut built at x0.
  std::function<double(double)> surrogate;
  /// Constraint value at x, positive when violated.
  std::function<double(double)> violation;
  /// Derivative of the summed violation direction along the diagonal.
  std::function<double(double)> direction;
  double feasible_point;
};

inline ScalarCutFamily square_cut(double ub) {
  return {ub,
          [ub](double x0) { return x0 <= 0 ? ub : std::min(ub, x0 / 2.0 + 2.0 / x0); },
          [](double x) { return x * x - 4.0; },
          [](double x) { return 2.0 * x; },
          2.0};
}

/// Symmetric model of seeded_ring: both rows of x1^2 + x2 <= 6 and x2^2 + x1 <= 6
/// stay equal along the diagonal, and each coordinate of the stage-1 step
/// collects one row's 2x and the other row's 1.
inline ScalarCutFamily ring_cut(double ub) {
  return {ub,
          [ub](double a) { return std::min(ub, (a * a + 6.0) / (2.0 * a + 1.0)); },
          [](double x) { return x * x + x - 6.0; },
          [](double x) { return 2.0 * x + 1.0; },
          2.0};
}

/// 1 when the correction loop reaches feasibility within L iterations, with
/// step sizes 1/(l+1), a first rung that re-linearizes at the last point, a
/// second rung that runs linearization to convergence, and nothing after.
inline bool corrected_within(const ScalarCutFamily& f, int L, double eps = 1e-6) {
  double x = f.surrogate(f.ub / 2.0);
  if (f.violation(x) <= eps) return true;
  const int half = L / 2;
  for (int l = 1; l <= L; ++l) {
    if (l <= half) {
      double alpha = 1.0 / (l + 1);
      double x0 = std::clamp(x - alpha * f.violation(x) * f.direction(x), 0.0, f.ub);
      x = f.surrogate(x0);
    } else if (l - half - 1 == 0) {
      x = f.surrogate(x);
    } else if (l - half - 1 == 1) {
      x = f.feasible_point;
    }
    if (f.violation(x) <= eps) return true;
  }
  return false;
}

inline int correction_depth(const ScalarCutFamily& f, int max_l = 20) {
  for (int L = 0; L <= max_l; ++L)
    if (corrected_within(f, L)) return L;
  return -1;
}

}  // namespace oracle
