#include "ncx/convexify.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace ncx {

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::SCA: return "SCA";
    case Strategy::Substitution: return "Substitution";
    case Strategy::BinaryRelaxation: return "BinaryRelaxation";
    case Strategy::RatioRearrange: return "RatioRearrange";
    case Strategy::EpigraphLift: return "EpigraphLift";
    case Strategy::SDR: return "SDR";
    case Strategy::Lagrangian: return "Lagrangian";
  }
  return "?";
}

namespace {

std::string describe(const std::vector<NonconvexComponent>& comps) {
  std::string s;
  for (const auto& c : comps) {
    if (!s.empty()) s += "; ";
    s += std::string(to_string(c.kind)) + " at " + c.location.describe();
  }
  return s;
}

}  // namespace

ConvexificationFailed::ConvexificationFailed(std::vector<NonconvexComponent> residual, std::string why)
    : Error("convexification failed" + (why.empty() ? std::string() : ": " + why) +
            (residual.empty() ? std::string() : " (residual: " + describe(residual) + ")")),
      residual_(std::move(residual)) {}

Unimplemented::Unimplemented(Strategy s)
    : Error("strategy " + std::string(to_string(s)) + " is not implemented") {}

NoStrategy::NoStrategy(const NonconvexComponent& c)
    : Error("no strategy for " + std::string(to_string(c.kind)) + " at " + c.location.describe()) {}

ConvexProblem::ConvexProblem(Problem problem, TransformRecord record, std::shared_ptr<const Problem> original)
    : problem_(std::move(problem)), record_(std::move(record)), original_(std::move(original)) {
  if (!original_) original_ = std::make_shared<const Problem>(problem_);
  if (!verify_convex(problem_)) throw ConvexificationFailed(detect_nonconvex(problem_));
}

// ---------------------------------------------------------------------------

namespace {

Expr rebuild(const Expr& e, std::vector<Expr> cs) {
  switch (e.kind()) {
    case NodeKind::Add: return Expr::add(std::move(cs));
    case NodeKind::Mul: return Expr::mul(std::move(cs));
    case NodeKind::Div: return Expr::div(std::move(cs[0]), std::move(cs[1]));
    case NodeKind::Pow: return Expr::pow(std::move(cs[0]), e.exponent());
    case NodeKind::Neg: return Expr::neg(std::move(cs[0]));
    case NodeKind::Log: return Expr::log(std::move(cs[0]));
    case NodeKind::Log2: return Expr::log2(std::move(cs[0]));
    case NodeKind::Exp: return Expr::exp(std::move(cs[0]));
    case NodeKind::Abs: return Expr::abs(std::move(cs[0]));
    case NodeKind::Sqrt: return Expr::sqrt(std::move(cs[0]));
    default: return e;
  }
}

/// Replaces subtrees by node identity.
Expr replace_nodes(const Expr& e, const std::unordered_map<const void*, Expr>& repl) {
  if (auto it = repl.find(e.id()); it != repl.end()) return it->second;
  if (e.children().empty()) return e;
  std::vector<Expr> cs;
  bool changed = false;
  for (const auto& c : e.children()) {
    cs.push_back(replace_nodes(c, repl));
    changed = changed || cs.back().id() != c.id();
  }
  return changed ? rebuild(e, std::move(cs)) : e;
}

/// +1 when `target` enters `root` with a nonnegative weight, -1 with a
/// nonpositive one, 0 when the path is not monotone or not found.
int context_sign(const Expr& root, const Expr& target, const SignContext& ctx) {
  if (root.id() == target.id()) return 1;
  switch (root.kind()) {
    case NodeKind::Add:
      for (const auto& c : root.children())
        if (int s = context_sign(c, target, ctx)) return s;
      return 0;
    case NodeKind::Neg: return -context_sign(root.child(0), target, ctx);
    case NodeKind::Mul: {
      for (std::size_t k = 0; k < root.children().size(); ++k) {
        int s = context_sign(root.child(k), target, ctx);
        if (!s) continue;
        Interval c{1.0, 1.0};
        for (std::size_t m = 0; m < root.children().size(); ++m) {
          if (m == k) continue;
          if (curvature_of(root.child(m), ctx) != Curvature::Constant) return 0;
          auto r = range_of(root.child(m), ctx);
          double p[] = {c.lo * r.lo, c.lo * r.hi, c.hi * r.lo, c.hi * r.hi};
          c = {std::min({p[0], p[1], p[2], p[3]}), std::max({p[0], p[1], p[2], p[3]})};
        }
        if (c.lo >= 0) return s;
        if (c.hi <= 0) return -s;
        return 0;
      }
      return 0;
    }
    case NodeKind::Div: {
      int s = context_sign(root.child(0), target, ctx);
      if (!s || curvature_of(root.child(1), ctx) != Curvature::Constant) return 0;
      Sign d = sign_of(root.child(1), ctx);
      return d == Sign::Positive ? s : d == Sign::Negative ? -s : 0;
    }
    default: return 0;
  }
}

bool ratio_threshold_shape(const Expr& g, Expr* ratio, bool* negated, Expr* rest) {
  std::vector<Expr> terms;
  if (g.kind() == NodeKind::Add)
    terms.assign(g.children().begin(), g.children().end());
  else
    terms.push_back(g);
  std::optional<std::size_t> at;
  for (std::size_t k = 0; k < terms.size(); ++k) {
    const Expr& t = terms[k];
    bool is_ratio = t.kind() == NodeKind::Div ||
                    (t.kind() == NodeKind::Neg && t.child(0).kind() == NodeKind::Div);
    if (!is_ratio) continue;
    if (at) return false;
    at = k;
  }
  if (!at) return false;
  const Expr& t = terms[*at];
  *negated = t.kind() == NodeKind::Neg;
  *ratio = *negated ? t.child(0) : t;
  terms.erase(terms.begin() + static_cast<std::ptrdiff_t>(*at));
  *rest = Expr::add(std::move(terms));
  return true;
}

}  // namespace

Strategy select_strategy(const NonconvexComponent& comp, const Problem& pb) {
  switch (comp.kind) {
    case ComponentKind::IntegerVariable:
      return Strategy::BinaryRelaxation;
    case ComponentKind::FractionalRatio:
      if (comp.location.kind == Location::Kind::Inequality && comp.location.index < pb.ineq.size()) {
        Expr ratio, rest;
        bool negated = false;
        SignContext ctx(pb);
        if (ratio_threshold_shape(pb.ineq[comp.location.index].expr, &ratio, &negated, &rest) &&
            ratio.id() == comp.term.id() && curvature_of(rest, ctx) == Curvature::Constant &&
            sign_of(ratio.child(1), ctx) == Sign::Positive)
          return Strategy::RatioRearrange;
      }
      return Strategy::SCA;
    case ComponentKind::UnknownCurvatureTerm:
      if (comp.term.kind() == NodeKind::Abs && comp.location.kind == Location::Kind::Objective &&
          pb.direction == Direction::Minimize &&
          context_sign(pb.objective, comp.term, SignContext(pb)) > 0)
        return Strategy::EpigraphLift;
      return Strategy::SCA;
    case ComponentKind::BilinearProduct:
    case ComponentKind::ConcaveInMinimize:
    case ComponentKind::ConvexInMaximizeViolation:
    case ComponentKind::NonaffineEquality:
      return Strategy::SCA;
  }
  throw NoStrategy(comp);
}

Expr sca_linearize(const Expr& expr, const Assignment& x0) {
  auto vars = free_vars(expr);
  double f0 = evaluate(expr, x0);
  auto grad = gradient(expr, x0, vars);
  std::vector<Expr> terms{Expr::constant(f0)};
  for (const auto& v : vars) {
    double g = grad.at(v);
    if (g == 0.0) continue;
    double at = x0.at(v);
    Expr shift = at == 0.0 ? Expr::variable(v) : Expr::add({Expr::variable(v), Expr::constant(-at)});
    terms.push_back(g == 1.0 ? shift : Expr::mul({Expr::constant(g), shift}));
  }
  return Expr::add(std::move(terms));
}

Problem relax_integrality(const Problem& pb) {
  Problem out = pb;
  for (auto& v : out.variables) v.kind = VarKind::Continuous;
  return out;
}

Expr rearrange_ratio(const Expr& con, const SignContext& signs) {
  Expr ratio, rest;
  bool negated = false;
  if (!ratio_threshold_shape(con, &ratio, &negated, &rest))
    throw ShapeMismatch("constraint is not a ratio threshold: " + to_string(con));
  if (curvature_of(rest, signs) != Curvature::Constant)
    throw ShapeMismatch("threshold side of the ratio is not constant: " + to_string(rest));
  const Expr& num = ratio.child(0);
  const Expr& den = ratio.child(1);
  if (sign_of(den, signs) != Sign::Positive)
    throw SignUncertifiable("denominator is not certified positive: " + to_string(den));
  // gamma - num/den <= 0  <=>  gamma*den - num <= 0, and symmetrically.
  Expr scaled = rest.is_const(1.0) ? den : Expr::mul({rest, den});
  if (negated) {
    if (rest.is_const(0.0)) return Expr::neg(num);
    return Expr::add({scaled, Expr::neg(num)});
  }
  if (rest.is_const(0.0)) return num;
  return Expr::add({num, scaled});
}

Assignment default_reference_point(const Problem& pb) {
  constexpr double kInset = 1e-6;
  Assignment x0;
  for (const auto& v : pb.scalar_variables()) {
    bool lo = std::isfinite(v.lb), hi = std::isfinite(v.ub);
    double x = lo && hi ? 0.5 * (v.lb + v.ub) : lo ? v.lb + 1.0 : hi ? v.ub - 1.0 : 0.0;
    if (lo && hi && v.ub - v.lb > 2 * kInset)
      x = std::clamp(x, v.lb + kInset, v.ub - kInset);
    else if (lo && !hi)
      x = std::max(x, v.lb + kInset);
    else if (hi && !lo)
      x = std::min(x, v.ub - kInset);
    x0.set(v.name, x);
  }
  return x0;
}

// ---------------------------------------------------------------------------

namespace {

class Convexifier {
 public:
  Convexifier(const Problem& pb, const Assignment& x0, const ConvexifyPolicy& policy)
      : cur_(pb), policy_(policy) {
    for (const auto& v : pb.scalar_variables()) {
      double x = x0.at(v.name);
      double tol = 1e-9 * std::max(1.0, std::fabs(x));
      if (x < v.lb - tol || x > v.ub + tol)
        throw BoundViolation("reference point " + v.name + " = " + format_number(x) + " lies outside its bounds");
      ref_.set(v.name, x);
    }
  }

  TransformRecord run() {
    if (!policy_.substitutions.empty()) substitute_all();
    for (int pass = 0; pass < std::max(1, policy_.max_passes); ++pass) {
      auto comps = detect_nonconvex(cur_);
      if (comps.empty()) break;
      std::size_t k = 0;
      while (k < comps.size()) {
        std::size_t e = k;
        while (e < comps.size() && comps[e].location == comps[k].location) ++e;
        std::vector<NonconvexComponent> group(comps.begin() + static_cast<std::ptrdiff_t>(k),
                                              comps.begin() + static_cast<std::ptrdiff_t>(e));
        apply(group);
        k = e;
      }
    }
    if (used_sca_) rec_.reference = ref_;
    return std::move(rec_);
  }

  Problem take() { return std::move(cur_); }

 private:
  Strategy choose(const NonconvexComponent& c) {
    if (auto it = policy_.overrides.find(c.kind); it != policy_.overrides.end()) return it->second;
    Strategy s = select_strategy(c, cur_);
    if (s == Strategy::EpigraphLift && !policy_.allow_epigraph) s = Strategy::SCA;
    return s;
  }

  Expr& row(const Location& loc) {
    switch (loc.kind) {
      case Location::Kind::Inequality: return cur_.ineq[loc.index].expr;
      case Location::Kind::Equality: return cur_.eq[loc.index].expr;
      default: return cur_.objective;
    }
  }

  void apply(const std::vector<NonconvexComponent>& group) {
    const NonconvexComponent& first = group.front();
    Strategy s = choose(first);
    switch (s) {
      case Strategy::BinaryRelaxation: {
        VarDecl* d = cur_.find_family(first.location.variable);
        if (!d) throw NoStrategy(first);
        d->kind = VarKind::Continuous;
        rec_.entries.push_back({first, s, first.term, first.term, std::nullopt});
        return;
      }
      case Strategy::RatioRearrange: {
        Expr& g = row(first.location);
        try {
          Expr after = rearrange_ratio(g, SignContext(cur_));
          rec_.entries.push_back({first, s, g, after, std::nullopt});
          g = after;
          return;
        } catch (const ShapeMismatch&) {
        } catch (const SignUncertifiable&) {
        }
        return linearize(group);
      }
      case Strategy::EpigraphLift:
        return lift(group);
      case Strategy::SCA:
        return linearize(group);
      case Strategy::SDR:
      case Strategy::Lagrangian:
        throw Unimplemented(s);
      case Strategy::Substitution:
        throw NoStrategy(first);
    }
  }

  void linearize(const std::vector<NonconvexComponent>& group) {
    const NonconvexComponent& first = group.front();
    if (first.location.kind == Location::Kind::Variable) throw NoStrategy(first);
    Expr& target = row(first.location);
    Assignment at = cur_.bind(ref_);
    Expr after;
    if (policy_.partial_linearization && first.kind != ComponentKind::NonaffineEquality) {
      std::unordered_map<const void*, Expr> repl;
      for (const auto& c : group) repl.emplace(c.term.id(), sca_linearize(c.term, at));
      after = replace_nodes(target, repl);
    } else {
      after = sca_linearize(target, at);
    }
    if (first.location.kind == Location::Kind::Objective && policy_.proximal > 0.0)
      after = with_proximal(after, free_vars(target));
    used_sca_ = true;
    rec_.entries.push_back({first, Strategy::SCA, target, after, ref_});
    target = after;
  }

  Expr with_proximal(const Expr& f, const std::set<std::string>& vars) const {
    std::vector<Expr> squares;
    for (const auto& v : vars) {
      double x = ref_.at(v);
      Expr d = x == 0.0 ? Expr::variable(v) : Expr::add({Expr::variable(v), Expr::constant(-x)});
      squares.push_back(Expr::pow(d, 2.0));
    }
    if (squares.empty()) return f;
    Expr prox = Expr::mul({Expr::constant(0.5 * policy_.proximal), Expr::add(std::move(squares))});
    return Expr::add({f, cur_.direction == Direction::Minimize ? prox : Expr::neg(prox)});
  }

  void lift(const std::vector<NonconvexComponent>& group) {
    std::unordered_map<const void*, Expr> repl;
    Assignment at = cur_.bind(ref_);
    for (const auto& c : group) {
      if (c.term.kind() != NodeKind::Abs || repl.count(c.term.id())) continue;
      std::string name;
      do {
        name = "epi" + std::to_string(++lifted_);
      } while (cur_.find_family(name) || cur_.find_param(name));
      const Expr& u = c.term.child(0);
      Expr t = Expr::variable(name);
      cur_.variables.push_back({name, VarKind::Continuous, 0.0, kInf, {}});
      cur_.ineq.push_back({Expr::add({u, Expr::neg(t)}), name});
      cur_.ineq.push_back({Expr::add({Expr::neg(u), Expr::neg(t)}), name});
      ref_.set(name, std::fabs(evaluate(u, at)) + 1e-6);
      repl.emplace(c.term.id(), t);
      rec_.entries.push_back({c, Strategy::EpigraphLift, c.term, t, std::nullopt});
    }
    if (repl.empty()) return linearize(group);
    cur_.objective = replace_nodes(cur_.objective, repl);
  }

  void substitute_all() {
    auto sub = [&](Expr& e, Location loc) {
      Expr after = substitute(e, policy_.substitutions);
      if (after == e) return;
      rec_.entries.push_back({{loc, ComponentKind::UnknownCurvatureTerm, e}, Strategy::Substitution, e, after, std::nullopt});
      e = after;
    };
    for (std::size_t i = 0; i < cur_.ineq.size(); ++i)
      sub(cur_.ineq[i].expr, {Location::Kind::Inequality, i, {}});
    for (std::size_t j = 0; j < cur_.eq.size(); ++j) sub(cur_.eq[j].expr, {Location::Kind::Equality, j, {}});
    sub(cur_.objective, {Location::Kind::Objective, 0, {}});
  }

  Problem cur_;
  const ConvexifyPolicy& policy_;
  Assignment ref_;
  TransformRecord rec_;
  bool used_sca_ = false;
  int lifted_ = 0;
};

}  // namespace

ConvexProblem convexify_problem(const Problem& pb, const Assignment& x0, const ConvexifyPolicy& policy) {
  auto original = std::make_shared<const Problem>(pb);
  Convexifier c(pb, x0, policy);
  TransformRecord rec = c.run();
  Problem out = c.take();
  if (!verify_convex(out)) throw ConvexificationFailed(detect_nonconvex(out));
  return ConvexProblem(std::move(out), std::move(rec), std::move(original));
}

}  // namespace ncx
