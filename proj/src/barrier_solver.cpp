// Primal log-barrier method. Affine equalities are eliminated through an
// orthonormal null-space basis, each barrier stage is minimized with L-BFGS and
// an Armijo backtracking line search, and infeasible starts go through a
// phase-I problem first.

#include <Eigen/Dense>
#include <cmath>
#include <deque>
#include <functional>

#include "solver_internal.hpp"

namespace ncx::detail {

namespace {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Value and gradient; false outside the domain.
using Fn = std::function<bool(const Vec&, double&, Vec&)>;

struct Minimized {
  Vec y;
  double value = 0.0;
  Vec grad;
  int iterations = 0;
  bool diverged = false;
};

Minimized lbfgs(const Fn& fn, Vec y, double gtol, int max_iter, const SolveOptions& o,
                const std::function<bool(const Vec&)>& stop = {}) {
  constexpr int kMemory = 8;
  Minimized r;
  r.grad.resize(y.size());
  if (!fn(y, r.value, r.grad)) {
    r.y = std::move(y);
    r.diverged = true;
    return r;
  }
  std::deque<std::pair<Vec, Vec>> mem;
  Vec g_new(y.size());
  int flat = 0;
  for (; r.iterations < max_iter; ++r.iterations) {
    if (r.grad.lpNorm<Eigen::Infinity>() <= gtol) break;
    if (stop && stop(y)) break;

    // Two-loop recursion.
    Vec d = -r.grad;
    std::vector<double> alpha(mem.size());
    for (std::size_t k = mem.size(); k-- > 0;) {
      const auto& [s, q] = mem[k];
      alpha[k] = s.dot(d) / q.dot(s);
      d -= alpha[k] * q;
    }
    if (!mem.empty()) d *= mem.back().first.dot(mem.back().second) / mem.back().second.squaredNorm();
    for (std::size_t k = 0; k < mem.size(); ++k) {
      const auto& [s, q] = mem[k];
      double b = q.dot(d) / q.dot(s);
      d += (alpha[k] - b) * s;
    }
    double slope = r.grad.dot(d);
    if (!(slope < 0)) {
      mem.clear();
      d = -r.grad;
      slope = -r.grad.squaredNorm();
    }

    double step = mem.empty() ? std::min(1.0, o.initial_step / std::max(1e-300, d.lpNorm<Eigen::Infinity>())) : 1.0;
    double f_new = 0.0;
    Vec y_new;
    bool accepted = false;
    while (step > 1e-20) {
      y_new = y + step * d;
      if (fn(y_new, f_new, g_new) && f_new <= r.value + o.armijo * step * slope) {
        accepted = true;
        break;
      }
      step *= o.backtrack;
    }
    if (!accepted) break;
    if (!std::isfinite(f_new) || f_new < -1e100) {
      r.diverged = true;
      y = std::move(y_new);
      break;
    }

    Vec s = y_new - y;
    Vec q = g_new - r.grad;
    if (s.dot(q) > 1e-16 * s.norm() * q.norm()) {
      mem.emplace_back(std::move(s), std::move(q));
      if (mem.size() > kMemory) mem.pop_front();
    }
    double drop = r.value - f_new;
    flat = drop <= 1e-15 * std::max(1.0, std::fabs(r.value)) ? flat + 1 : 0;
    y = std::move(y_new);
    r.value = f_new;
    r.grad = g_new;
    if (flat >= 5) break;
  }
  r.y = std::move(y);
  return r;
}

class Barrier {
 public:
  Barrier(const Compiled& c, Mat z, Vec xp) : c_(c), z_(std::move(z)), xp_(std::move(xp)), gx_(c.n()), gt_(c.n()) {
    for (std::size_t k = 0; k < c.n(); ++k) {
      if (std::isfinite(c.lb[k])) ++m_;
      if (std::isfinite(c.ub[k])) ++m_;
    }
    m_ += c.g.size();
  }

  std::size_t constraint_count() const noexcept { return m_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(z_.cols()); }
  Vec x_of(const Vec& y) const { return xp_ + z_ * y; }
  Vec y_of(const Vec& x) const { return z_.transpose() * (x - xp_); }

  /// Largest of g_i(x) and the box gaps lb - x, x - ub; +inf outside the domain.
  double max_violation(const Vec& x) const {
    double worst = -kInf;
    for (const auto& g : c_.g) {
      double v;
      if (g.try_value({x.data(), static_cast<std::size_t>(x.size())}, v) != EvalStatus::Ok) return kInf;
      worst = std::max(worst, v);
    }
    for (std::size_t k = 0; k < c_.n(); ++k) worst = std::max({worst, c_.lb[k] - x[k], x[k] - c_.ub[k]});
    return worst;
  }

  /// t f(x) - sum log(-g_i) - sum log(box slacks); in phase I every
  /// constraint is relaxed by s = y_last and the objective is t s.
  bool eval(const Vec& y, double t, bool phase1, double& v, Vec& grad) {
    const std::size_t k = dim();
    Vec x = x_of(phase1 ? Vec(y.head(k)) : y);
    double s = phase1 ? y[k] : 0.0;
    std::span<const double> xs{x.data(), c_.n()};
    gx_.setZero();
    double ds = 0.0;
    if (phase1) {
      v = t * s;
      ds = t;
    } else {
      double fx;
      if (c_.f.try_value_and_gradient(xs, fx, gt_) != EvalStatus::Ok || !std::isfinite(fx)) return false;
      v = t * fx;
      for (std::size_t i = 0; i < c_.n(); ++i) gx_[i] = t * gt_[i];
    }
    for (const auto& g : c_.g) {
      double gv;
      if (g.try_value_and_gradient(xs, gv, gt_) != EvalStatus::Ok) return false;
      double slack = s - gv;
      if (!(slack > 0)) return false;
      v -= std::log(slack);
      for (std::size_t i : g.support()) gx_[i] += gt_[i] / slack;
      ds -= 1.0 / slack;
    }
    for (std::size_t i = 0; i < c_.n(); ++i) {
      if (std::isfinite(c_.lb[i])) {
        double slack = x[i] - c_.lb[i] + s;
        if (!(slack > 0)) return false;
        v -= std::log(slack);
        gx_[i] -= 1.0 / slack;
        ds -= 1.0 / slack;
      }
      if (std::isfinite(c_.ub[i])) {
        double slack = c_.ub[i] - x[i] + s;
        if (!(slack > 0)) return false;
        v -= std::log(slack);
        gx_[i] += 1.0 / slack;
        ds -= 1.0 / slack;
      }
    }
    grad.resize(y.size());
    grad.head(k) = z_.transpose() * gx_;
    if (phase1) grad[k] = ds;
    return std::isfinite(v);
  }

 private:
  const Compiled& c_;
  Mat z_;
  Vec xp_;
  Vec gx_;
  std::vector<double> gt_;
  std::size_t m_ = 0;
};

/// Particular solution and null-space basis of the affine equalities.
bool eliminate(const Compiled& c, Mat& z, Vec& xp, std::string& why) {
  const auto n = static_cast<Eigen::Index>(c.n());
  if (c.h.empty()) {
    z = Mat::Identity(n, n);
    xp = Vec::Zero(n);
    return true;
  }
  Mat a(static_cast<Eigen::Index>(c.h.size()), n);
  Vec b(a.rows());
  for (std::size_t j = 0; j < c.h.size(); ++j) {
    auto row = affine_row(c.h[j], c.n());
    for (Eigen::Index i = 0; i < n; ++i) a(static_cast<Eigen::Index>(j), i) = row.a[static_cast<std::size_t>(i)];
    b[static_cast<Eigen::Index>(j)] = -row.c;
  }
  Eigen::ColPivHouseholderQR<Mat> qr(a.transpose());
  qr.setThreshold(1e-10);
  const auto rank = qr.rank();
  Mat q = qr.householderQ() * Mat::Identity(n, n);
  z = q.rightCols(n - rank);
  xp = a.completeOrthogonalDecomposition().solve(b);
  double resid = (a * xp - b).lpNorm<Eigen::Infinity>();
  if (resid > 1e-9 * std::max(1.0, b.lpNorm<Eigen::Infinity>())) {
    why = "equality constraints are inconsistent";
    return false;
  }
  return true;
}

/// Stationarity of the Lagrangian with least-squares multipliers on the
/// near-active rows, clamped to be nonnegative; includes complementarity.
double active_set_proxy(const Compiled& c, const Mat& z, const std::vector<double>& x) {
  constexpr double kActive = 1e-6;
  const auto n = static_cast<Eigen::Index>(c.n());
  std::vector<double> gt(c.n());
  double fx;
  if (c.f.try_value_and_gradient(x, fx, gt) != EvalStatus::Ok) return kInf;
  Vec gf = Eigen::Map<const Vec>(gt.data(), n);
  std::vector<Vec> cols;
  std::vector<double> slack;
  for (const auto& g : c.g) {
    double gv;
    if (g.try_value_and_gradient(x, gv, gt) != EvalStatus::Ok) return kInf;
    if (-gv > kActive * std::max(1.0, std::fabs(fx))) continue;
    cols.push_back(Eigen::Map<const Vec>(gt.data(), n));
    slack.push_back(std::fabs(gv));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    auto k = static_cast<std::size_t>(i);
    for (int side : {-1, 1}) {
      double gap = side < 0 ? x[k] - c.lb[k] : c.ub[k] - x[k];
      if (!(gap <= kActive)) continue;
      cols.push_back(Vec::Unit(n, i) * side);
      slack.push_back(gap);
    }
  }
  Vec b = -(z.transpose() * gf);
  if (cols.empty()) return b.lpNorm<Eigen::Infinity>();
  Mat j(n, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) j.col(static_cast<Eigen::Index>(k)) = cols[k];
  Mat a = z.transpose() * j;
  Vec lambda = a.completeOrthogonalDecomposition().solve(b).cwiseMax(0.0);
  double worst = (a * lambda - b).lpNorm<Eigen::Infinity>();
  for (std::size_t k = 0; k < slack.size(); ++k) worst = std::max(worst, lambda[static_cast<Eigen::Index>(k)] * slack[k]);
  return worst;
}

}  // namespace

Solution solve_barrier(const Problem& pb, const Assignment& x0, const SolveOptions& opts) {
  Compiled c(pb);
  Solution sol;
  Mat z;
  Vec xp;
  if (!eliminate(c, z, xp, sol.message)) {
    sol.status = SolveStatus::Infeasible;
    return sol;
  }
  Barrier bar(c, z, xp);
  const std::size_t k = bar.dim();

  auto start = interior_start(c, x0);
  Vec y = bar.y_of(Eigen::Map<const Vec>(start.data(), static_cast<Eigen::Index>(start.size())));
  int iterations = 0;

  // Phase I: minimize the common relaxation s until the point is strictly inside.
  double viol = bar.max_violation(bar.x_of(y));
  if (viol == kInf) {
    sol.status = SolveStatus::NumericalFailure;
    sol.message = "start point lies outside the constraint domain";
    return sol;
  }
  if (viol >= 0 && bar.constraint_count() > 0) {
    const double margin = 1e-9 * std::max(1.0, std::fabs(viol));
    Vec ys(static_cast<Eigen::Index>(k) + 1);
    ys.head(static_cast<Eigen::Index>(k)) = y;
    ys[static_cast<Eigen::Index>(k)] = viol + 1.0;
    auto inside = [&](const Vec& v) { return bar.max_violation(bar.x_of(v.head(static_cast<Eigen::Index>(k)))) < -margin; };
    bool found = false;
    for (double t = 1.0; t < 1e12 && !found; t *= 10.0) {
      Fn fn = [&](const Vec& v, double& val, Vec& g) { return bar.eval(v, t, true, val, g); };
      auto r = lbfgs(fn, ys, 1e-10, opts.max_iterations, opts, inside);
      iterations += r.iterations;
      ys = r.y;
      found = inside(ys);
      if (r.diverged) break;
      // A relaxation bounded away from zero will not close.
      if (!found && ys[static_cast<Eigen::Index>(k)] > 1e-6 * std::max(1.0, std::fabs(viol)) && t >= 1e6) break;
    }
    if (!found) {
      sol.status = SolveStatus::Infeasible;
      sol.iterations = iterations;
      sol.message = "no strictly feasible point found";
      return sol;
    }
    y = ys.head(static_cast<Eigen::Index>(k));
  }

  const double m = static_cast<double>(bar.constraint_count());
  double t = m > 0 ? 1.0 / opts.mu0 : 1.0;
  Minimized r;
  bool done = false;
  for (int stage = 0; stage < 64 && !done; ++stage) {
    Fn fn = [&](const Vec& v, double& val, Vec& g) { return bar.eval(v, t, false, val, g); };
    r = lbfgs(fn, y, opts.tolerance * std::max(1.0, t), opts.max_iterations, opts);
    iterations += r.iterations;
    y = r.y;
    if (r.diverged) {
      sol.status = SolveStatus::NumericalFailure;
      sol.iterations = iterations;
      sol.message = "objective is unbounded or left its domain";
      return sol;
    }
    double fx = r.value / t;
    done = m == 0 || m / t <= opts.tolerance * std::max(1.0, std::fabs(fx));
    if (!done) t /= opts.mu_shrink;
  }

  Vec x = bar.x_of(y);
  std::vector<double> xv(x.data(), x.data() + x.size());
  for (double v : xv)
    if (!std::isfinite(v)) {
      sol.status = SolveStatus::NumericalFailure;
      sol.message = "non-finite iterate";
      return sol;
    }
  sol.x = c.index.unpack(xv);
  sol.iterations = iterations;
  double centered = r.grad.size() ? r.grad.lpNorm<Eigen::Infinity>() / t : 0.0;
  sol.residuals.stationarity = std::min(centered, active_set_proxy(c, z, xv));
  finish_solution(pb, sol);
  bool ok = done && sol.residuals.max_ineq <= 1e-6 && sol.residuals.max_eq <= 1e-6 &&
            sol.residuals.stationarity <= 1e-6;
  sol.status = ok ? SolveStatus::Optimal : SolveStatus::MaxIterations;
  return sol;
}

}  // namespace ncx::detail
