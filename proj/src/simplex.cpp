// Dense two-phase simplex with Bland's rule for the all-affine path.

#include <algorithm>
#include <cmath>

#include "solver_internal.hpp"

namespace ncx::detail {

namespace {

constexpr double kPivotTol = 1e-9;

/// min c^T z  s.t.  A z = b, z >= 0, b >= 0, as a full tableau.
class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols) : m_(rows), n_(cols), t_((rows + 1) * (cols + 1), 0.0) {}

  double& at(std::size_t r, std::size_t c) { return t_[r * (n_ + 1) + c]; }
  double& rhs(std::size_t r) { return at(r, n_); }
  /// Row m holds reduced costs; its rhs is minus the objective.
  double& cost(std::size_t c) { return at(m_, c); }

  void pivot(std::size_t pr, std::size_t pc) {
    double p = at(pr, pc);
    for (std::size_t c = 0; c <= n_; ++c) at(pr, c) /= p;
    for (std::size_t r = 0; r <= m_; ++r) {
      if (r == pr) continue;
      double f = at(r, pc);
      if (f == 0.0) continue;
      for (std::size_t c = 0; c <= n_; ++c) at(r, c) -= f * at(pr, c);
    }
    basis_[pr] = pc;
  }

  enum class Outcome { Optimal, Unbounded, Limit };

  /// Bland's rule over the columns allowed by `usable`.
  template <class Pred>
  Outcome run(Pred usable, int& budget) {
    while (true) {
      std::size_t enter = n_;
      for (std::size_t c = 0; c < n_; ++c)
        if (usable(c) && cost(c) < -kPivotTol) {
          enter = c;
          break;
        }
      if (enter == n_) return Outcome::Optimal;
      if (budget-- <= 0) return Outcome::Limit;
      std::size_t leave = m_;
      double best = kInf;
      for (std::size_t r = 0; r < m_; ++r) {
        double a = at(r, enter);
        if (a <= kPivotTol) continue;
        double ratio = rhs(r) / a;
        if (leave == m_ || ratio < best - 1e-12 ||
            (std::fabs(ratio - best) <= 1e-12 && basis_[r] < basis_[leave])) {
          best = ratio;
          leave = r;
        }
      }
      if (leave == m_) return Outcome::Unbounded;
      pivot(leave, enter);
    }
  }

  std::size_t rows() const noexcept { return m_; }
  std::size_t cols() const noexcept { return n_; }
  std::vector<std::size_t> basis_;

 private:
  std::size_t m_, n_;
  std::vector<double> t_;
};

/// x_k = offset + sign * z_col (+ minus part for free variables).
struct Column {
  double offset = 0.0;
  double sign = 1.0;
  std::size_t col = 0;
  std::optional<std::size_t> neg_col;
};

}  // namespace

Solution solve_affine(const Problem& pb, const SolveOptions& opts) {
  Compiled c(pb);
  const std::size_t n = c.n();
  Solution sol;

  std::vector<Column> map(n);
  std::size_t ncols = 0;
  struct Row {
    std::vector<std::pair<std::size_t, double>> coef;
    bool equality;
    double rhs;
  };
  std::vector<Row> rows;
  for (std::size_t k = 0; k < n; ++k) {
    double lo = c.lb[k], hi = c.ub[k];
    if (std::isfinite(lo)) {
      map[k] = {lo, 1.0, ncols++, std::nullopt};
      if (std::isfinite(hi)) rows.push_back({{{map[k].col, 1.0}}, false, hi - lo});
    } else if (std::isfinite(hi)) {
      map[k] = {hi, -1.0, ncols++, std::nullopt};
    } else {
      map[k] = {0.0, 1.0, ncols, ncols + 1};
      ncols += 2;
    }
  }
  auto expand = [&](const AffineRow& r, double& constant) {
    std::vector<std::pair<std::size_t, double>> coef;
    constant = r.c;
    for (std::size_t k = 0; k < n; ++k) {
      double a = r.a[k];
      if (a == 0.0) continue;
      constant += a * map[k].offset;
      coef.push_back({map[k].col, a * map[k].sign});
      if (map[k].neg_col) coef.push_back({*map[k].neg_col, -a});
    }
    return coef;
  };
  for (const auto& g : c.g) {
    double k0;
    auto coef = expand(affine_row(g, n), k0);
    rows.push_back({std::move(coef), false, -k0});
  }
  for (const auto& h : c.h) {
    double k0;
    auto coef = expand(affine_row(h, n), k0);
    rows.push_back({std::move(coef), true, -k0});
  }
  double obj_const;
  auto obj = expand(affine_row(c.f, n), obj_const);

  std::size_t slacks = 0;
  for (const auto& r : rows) slacks += r.equality ? 0 : 1;
  const std::size_t m = rows.size();
  const std::size_t art0 = ncols + slacks;
  Tableau tab(m, art0 + m);
  tab.basis_.resize(m);
  std::size_t s = ncols;
  for (std::size_t r = 0; r < m; ++r) {
    double sign = rows[r].rhs < 0 ? -1.0 : 1.0;
    for (auto [col, a] : rows[r].coef) tab.at(r, col) += sign * a;
    if (!rows[r].equality) tab.at(r, s++) = sign;
    tab.rhs(r) = sign * rows[r].rhs;
    tab.at(r, art0 + r) = 1.0;
    tab.basis_[r] = art0 + r;
  }

  int budget = opts.max_iterations;
  // Phase 1: minimize the sum of artificials.
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t col = 0; col <= tab.cols(); ++col)
      if (col < art0 || col == tab.cols()) tab.at(m, col) -= tab.at(r, col);
  auto out = tab.run([](std::size_t) { return true; }, budget);
  if (out == Tableau::Outcome::Limit) {
    sol.status = SolveStatus::MaxIterations;
    sol.message = "pivot limit in phase 1";
    return sol;
  }
  if (-tab.rhs(m) > 1e-8 * std::max(1.0, static_cast<double>(m))) {
    sol.status = SolveStatus::Infeasible;
    sol.message = "affine constraints are inconsistent";
    return sol;
  }
  for (std::size_t r = 0; r < m; ++r) {
    if (tab.basis_[r] < art0) continue;
    for (std::size_t col = 0; col < art0; ++col)
      if (std::fabs(tab.at(r, col)) > kPivotTol) {
        tab.pivot(r, col);
        break;
      }
  }

  // Phase 2.
  for (std::size_t col = 0; col <= tab.cols(); ++col) tab.at(m, col) = 0.0;
  for (auto [col, a] : obj) tab.cost(col) += a;
  for (std::size_t r = 0; r < m; ++r) {
    double cb = tab.cost(tab.basis_[r]);
    if (cb == 0.0) continue;
    for (std::size_t col = 0; col <= tab.cols(); ++col) tab.at(m, col) -= cb * tab.at(r, col);
  }
  out = tab.run([&](std::size_t col) { return col < art0; }, budget);
  sol.iterations = opts.max_iterations - budget;
  if (out == Tableau::Outcome::Unbounded) {
    sol.status = SolveStatus::NumericalFailure;
    sol.message = "objective is unbounded";
    return sol;
  }

  std::vector<double> z(tab.cols(), 0.0);
  for (std::size_t r = 0; r < m; ++r) z[tab.basis_[r]] = tab.rhs(r);
  std::vector<double> x(n);
  for (std::size_t k = 0; k < n; ++k) {
    x[k] = map[k].offset + map[k].sign * z[map[k].col];
    if (map[k].neg_col) x[k] -= z[*map[k].neg_col];
    // Snap round-off back into the box.
    x[k] = std::clamp(x[k], c.lb[k], c.ub[k]);
  }
  sol.x = c.index.unpack(x);
  sol.status = out == Tableau::Outcome::Optimal ? SolveStatus::Optimal : SolveStatus::MaxIterations;
  finish_solution(pb, sol);
  return sol;
}

}  // namespace ncx::detail
