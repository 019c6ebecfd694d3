#include "ncx/curvature.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace ncx {

std::string_view to_string(Curvature c) {
  switch (c) {
    case Curvature::Constant: return "constant";
    case Curvature::Affine: return "affine";
    case Curvature::Convex: return "convex";
    case Curvature::Concave: return "concave";
    case Curvature::Unknown: return "unknown";
  }
  return "?";
}

std::string_view to_string(Sign s) {
  switch (s) {
    case Sign::Positive: return "positive";
    case Sign::Negative: return "negative";
    case Sign::Nonneg: return "nonneg";
    case Sign::Nonpos: return "nonpos";
    case Sign::Unknown: return "unknown";
  }
  return "?";
}

std::string_view to_string(ComponentKind k) {
  switch (k) {
    case ComponentKind::BilinearProduct: return "BilinearProduct";
    case ComponentKind::FractionalRatio: return "FractionalRatio";
    case ComponentKind::ConcaveInMinimize: return "ConcaveInMinimize";
    case ComponentKind::ConvexInMaximizeViolation: return "ConvexInMaximizeViolation";
    case ComponentKind::NonaffineEquality: return "NonaffineEquality";
    case ComponentKind::IntegerVariable: return "IntegerVariable";
    case ComponentKind::UnknownCurvatureTerm: return "UnknownCurvatureTerm";
  }
  return "?";
}

bool is_convex(Curvature c) noexcept {
  return c == Curvature::Constant || c == Curvature::Affine || c == Curvature::Convex;
}

bool is_concave(Curvature c) noexcept {
  return c == Curvature::Constant || c == Curvature::Affine || c == Curvature::Concave;
}

Curvature dual(Curvature c) noexcept {
  if (c == Curvature::Convex) return Curvature::Concave;
  if (c == Curvature::Concave) return Curvature::Convex;
  return c;
}

std::string Location::describe() const {
  switch (kind) {
    case Kind::Objective: return "objective";
    case Kind::Inequality: return "inequality " + std::to_string(index + 1);
    case Kind::Equality: return "equality " + std::to_string(index + 1);
    case Kind::Variable: return "variable " + variable;
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Intervals

SignContext::SignContext(const Problem& pb) {
  for (const auto& v : pb.scalar_variables()) ranges_[v.name] = {v.lb, v.ub};
  for (const auto& [name, value] : pb.param_assignment()) params_[name] = value;
}

Interval SignContext::range_of_var(std::string_view name) const {
  auto it = ranges_.find(name);
  return it == ranges_.end() ? Interval{} : it->second;
}

Interval SignContext::range_of_param(std::string_view name) const {
  auto it = params_.find(name);
  return it == params_.end() ? Interval{} : Interval{it->second, it->second};
}

namespace {

constexpr Interval kWhole{};

double safe_mul(double a, double b) { return (a == 0.0 || b == 0.0) ? 0.0 : a * b; }

Interval clean(Interval r) {
  if (std::isnan(r.lo)) r.lo = -kInf;
  if (std::isnan(r.hi)) r.hi = kInf;
  return r;
}

Interval add(Interval a, Interval b) { return clean({a.lo + b.lo, a.hi + b.hi}); }

Interval mul(Interval a, Interval b) {
  double p[] = {safe_mul(a.lo, b.lo), safe_mul(a.lo, b.hi), safe_mul(a.hi, b.lo), safe_mul(a.hi, b.hi)};
  return clean({*std::min_element(p, p + 4), *std::max_element(p, p + 4)});
}

Interval neg(Interval a) { return {-a.hi, -a.lo}; }

Interval reciprocal(Interval b) {
  if (b.lo > 0.0 || b.hi < 0.0) return {1.0 / b.hi, 1.0 / b.lo};
  return kWhole;
}

Interval power(Interval a, double p) {
  bool integer = p == std::floor(p) && std::fabs(p) < 1e15;
  if (integer) {
    bool even = std::fmod(p, 2.0) == 0.0;
    if (p > 0) {
      if (!even) return {std::pow(a.lo, p), std::pow(a.hi, p)};
      if (a.lo >= 0) return {std::pow(a.lo, p), std::pow(a.hi, p)};
      if (a.hi <= 0) return {std::pow(a.hi, p), std::pow(a.lo, p)};
      return {0.0, std::max(std::pow(a.lo, p), std::pow(a.hi, p))};
    }
    if (a.lo > 0) return {std::pow(a.hi, p), std::pow(a.lo, p)};
    if (a.hi < 0) {
      if (even) return {std::pow(a.lo, p), std::pow(a.hi, p)};
      return {std::pow(a.hi, p), std::pow(a.lo, p)};
    }
    return even ? Interval{0.0, kInf} : kWhole;
  }
  double lo = std::max(a.lo, 0.0), hi = std::max(a.hi, 0.0);
  if (p > 0) return {std::pow(lo, p), std::pow(hi, p)};
  return {std::pow(hi, p), lo > 0 ? std::pow(lo, p) : kInf};
}

template <class F>
Interval increasing(Interval a, F f, double floor_value) {
  return clean({a.lo > 0 ? f(a.lo) : floor_value, a.hi > 0 ? f(a.hi) : floor_value});
}

}  // namespace

Interval range_of(const Expr& e, const SignContext& ctx) {
  switch (e.kind()) {
    case NodeKind::Const: return {e.value(), e.value()};
    case NodeKind::Var: return ctx.range_of_var(e.name());
    case NodeKind::Param: return ctx.range_of_param(e.name());
    case NodeKind::Add: {
      Interval r{0.0, 0.0};
      for (const auto& c : e.children()) r = add(r, range_of(c, ctx));
      return r;
    }
    case NodeKind::Mul: {
      Interval r{1.0, 1.0};
      for (const auto& c : e.children()) r = mul(r, range_of(c, ctx));
      return r;
    }
    case NodeKind::Div: return mul(range_of(e.child(0), ctx), reciprocal(range_of(e.child(1), ctx)));
    case NodeKind::Pow: return clean(power(range_of(e.child(0), ctx), e.exponent()));
    case NodeKind::Neg: return neg(range_of(e.child(0), ctx));
    case NodeKind::Log:
      return increasing(range_of(e.child(0), ctx), [](double v) { return std::log(v); }, -kInf);
    case NodeKind::Log2:
      return increasing(range_of(e.child(0), ctx), [](double v) { return std::log2(v); }, -kInf);
    case NodeKind::Sqrt:
      return increasing(range_of(e.child(0), ctx), [](double v) { return std::sqrt(v); }, 0.0);
    case NodeKind::Exp: {
      auto a = range_of(e.child(0), ctx);
      return {std::exp(a.lo), std::exp(a.hi)};
    }
    case NodeKind::Abs: {
      auto a = range_of(e.child(0), ctx);
      if (a.lo >= 0) return a;
      if (a.hi <= 0) return neg(a);
      return {0.0, std::max(-a.lo, a.hi)};
    }
  }
  return kWhole;
}

Sign sign_of(const Expr& e, const SignContext& ctx) {
  auto r = range_of(e, ctx);
  if (r.lo > 0) return Sign::Positive;
  if (r.hi < 0) return Sign::Negative;
  if (r.lo >= 0) return Sign::Nonneg;
  if (r.hi <= 0) return Sign::Nonpos;
  return Sign::Unknown;
}

// ---------------------------------------------------------------------------
// Curvature

namespace {

bool nonneg(Sign s) { return s == Sign::Positive || s == Sign::Nonneg; }
bool nonpos(Sign s) { return s == Sign::Negative || s == Sign::Nonpos; }

/// Curvature of c * f for a constant c of sign `s`.
Curvature scale(Curvature f, Sign s) {
  if (f == Curvature::Constant || f == Curvature::Affine) return f;
  if (nonneg(s)) return f;
  if (nonpos(s)) return dual(f);
  return Curvature::Unknown;
}

/// Composition with a scalar atom that is convex (or concave when `concave`)
/// and increasing, decreasing, or neither.
Curvature compose(Curvature arg, bool concave, int monotone) {
  if (arg == Curvature::Constant) return Curvature::Constant;
  Curvature atom = concave ? Curvature::Concave : Curvature::Convex;
  if (arg == Curvature::Affine) return atom;
  if (monotone > 0 && (concave ? is_concave(arg) : is_convex(arg))) return atom;
  if (monotone < 0 && (concave ? is_convex(arg) : is_concave(arg))) return atom;
  return Curvature::Unknown;
}

Curvature pow_curvature(const Expr& e, const SignContext& ctx) {
  const Expr& base = e.child(0);
  double p = e.exponent();
  Curvature b = curvature_of(base, ctx);
  if (b == Curvature::Constant || p == 0.0) return Curvature::Constant;
  if (p == 1.0) return b;
  Sign s = sign_of(base, ctx);
  bool integer = p == std::floor(p) && std::fabs(p) < 1e15;
  if (integer && p >= 2 && std::fmod(p, 2.0) == 0.0) {
    // Even powers: convex on R, increasing for x >= 0, decreasing for x <= 0.
    if (b == Curvature::Affine) return Curvature::Convex;
    if (nonneg(s)) return compose(b, false, 1);
    if (nonpos(s)) return compose(b, false, -1);
    return Curvature::Unknown;
  }
  if (p > 1) return nonneg(s) ? compose(b, false, 1) : Curvature::Unknown;
  if (p > 0) return nonneg(s) ? compose(b, true, 1) : Curvature::Unknown;
  return s == Sign::Positive ? compose(b, false, -1) : Curvature::Unknown;
}

}  // namespace

Curvature curvature_of(const Expr& e, const SignContext& ctx) {
  switch (e.kind()) {
    case NodeKind::Const:
    case NodeKind::Param: return Curvature::Constant;
    case NodeKind::Var: return Curvature::Affine;
    case NodeKind::Add: {
      bool all_const = true, convex = true, concave = true;
      for (const auto& c : e.children()) {
        Curvature k = curvature_of(c, ctx);
        all_const = all_const && k == Curvature::Constant;
        convex = convex && is_convex(k);
        concave = concave && is_concave(k);
      }
      if (all_const) return Curvature::Constant;
      if (convex && concave) return Curvature::Affine;
      if (convex) return Curvature::Convex;
      if (concave) return Curvature::Concave;
      return Curvature::Unknown;
    }
    case NodeKind::Mul: {
      Interval c{1.0, 1.0};
      const Expr* var_factor = nullptr;
      for (const auto& f : e.children()) {
        if (curvature_of(f, ctx) == Curvature::Constant) {
          c = mul(c, range_of(f, ctx));
        } else if (var_factor) {
          return Curvature::Unknown;
        } else {
          var_factor = &f;
        }
      }
      if (!var_factor) return Curvature::Constant;
      Sign s = c.lo >= 0 ? Sign::Nonneg : c.hi <= 0 ? Sign::Nonpos : Sign::Unknown;
      return scale(curvature_of(*var_factor, ctx), s);
    }
    case NodeKind::Div: {
      Curvature num = curvature_of(e.child(0), ctx);
      Curvature den = curvature_of(e.child(1), ctx);
      Sign ds = sign_of(e.child(1), ctx);
      if (den == Curvature::Constant) {
        if (num == Curvature::Constant) return Curvature::Constant;
        Sign s = ds == Sign::Positive ? Sign::Nonneg : ds == Sign::Negative ? Sign::Nonpos : Sign::Unknown;
        return scale(num, s);
      }
      // c / g with g > 0 concave is convex (1/x is convex and decreasing).
      if (num == Curvature::Constant) {
        Sign ns = sign_of(e.child(0), ctx);
        if (ds == Sign::Positive && is_concave(den)) {
          if (nonneg(ns)) return Curvature::Convex;
          if (nonpos(ns)) return Curvature::Concave;
        }
        if (ds == Sign::Negative && is_convex(den)) {
          if (nonneg(ns)) return Curvature::Concave;
          if (nonpos(ns)) return Curvature::Convex;
        }
      }
      return Curvature::Unknown;
    }
    case NodeKind::Pow: return pow_curvature(e, ctx);
    case NodeKind::Neg: return dual(curvature_of(e.child(0), ctx));
    case NodeKind::Log:
    case NodeKind::Log2:
    case NodeKind::Sqrt: return compose(curvature_of(e.child(0), ctx), true, 1);
    case NodeKind::Exp: return compose(curvature_of(e.child(0), ctx), false, 1);
    case NodeKind::Abs: {
      Curvature a = curvature_of(e.child(0), ctx);
      if (a == Curvature::Constant) return a;
      if (a == Curvature::Affine) return Curvature::Convex;
      Sign s = sign_of(e.child(0), ctx);
      if (nonneg(s)) return compose(a, false, 1);
      if (nonpos(s)) return compose(a, false, -1);
      return Curvature::Unknown;
    }
  }
  return Curvature::Unknown;
}

// ---------------------------------------------------------------------------
// Detection

namespace {

bool satisfies(Curvature c, bool want_convex) { return want_convex ? is_convex(c) : is_concave(c); }

/// Constant sign of every factor except `skip`, if all others are constant.
std::optional<Sign> constant_cofactor_sign(const Expr& prod, std::size_t skip, const SignContext& ctx) {
  Interval c{1.0, 1.0};
  for (std::size_t k = 0; k < prod.children().size(); ++k) {
    if (k == skip) continue;
    if (curvature_of(prod.child(k), ctx) != Curvature::Constant) return std::nullopt;
    c = mul(c, range_of(prod.child(k), ctx));
  }
  if (c.lo >= 0) return Sign::Nonneg;
  if (c.hi <= 0) return Sign::Nonpos;
  return Sign::Unknown;
}

struct Offender {
  Expr term;
  Curvature curvature;
  bool want_convex;
};

/// Top-most subterms that break the wanted curvature, looking through sums,
/// negation and constant scaling.
void offenders(const Expr& e, bool want_convex, const SignContext& ctx, std::vector<Offender>& out) {
  Curvature c = curvature_of(e, ctx);
  if (satisfies(c, want_convex)) return;
  switch (e.kind()) {
    case NodeKind::Add:
      for (const auto& t : e.children()) offenders(t, want_convex, ctx, out);
      return;
    case NodeKind::Neg:
      offenders(e.child(0), !want_convex, ctx, out);
      return;
    case NodeKind::Mul: {
      std::size_t var_factor = e.children().size();
      for (std::size_t k = 0; k < e.children().size(); ++k)
        if (curvature_of(e.child(k), ctx) != Curvature::Constant) {
          if (var_factor != e.children().size()) {
            var_factor = e.children().size();
            break;
          }
          var_factor = k;
        }
      if (var_factor < e.children().size()) {
        auto s = constant_cofactor_sign(e, var_factor, ctx);
        if (s && nonneg(*s)) return offenders(e.child(var_factor), want_convex, ctx, out);
        if (s && nonpos(*s)) return offenders(e.child(var_factor), !want_convex, ctx, out);
      }
      break;
    }
    case NodeKind::Div:
      if (curvature_of(e.child(1), ctx) == Curvature::Constant) {
        Sign s = sign_of(e.child(1), ctx);
        if (s == Sign::Positive) return offenders(e.child(0), want_convex, ctx, out);
        if (s == Sign::Negative) return offenders(e.child(0), !want_convex, ctx, out);
      }
      break;
    default:
      break;
  }
  out.push_back({e, c, want_convex});
}

ComponentKind kind_by_shape(const Expr& term) {
  switch (term.kind()) {
    case NodeKind::Mul: return ComponentKind::BilinearProduct;
    case NodeKind::Div: return ComponentKind::FractionalRatio;
    default: return ComponentKind::UnknownCurvatureTerm;
  }
}

}  // namespace

std::vector<NonconvexComponent> detect_nonconvex(const Problem& pb) {
  std::vector<NonconvexComponent> out;
  SignContext ctx(pb);

  for (const auto& v : pb.variables)
    if (v.discrete()) {
      Location loc{Location::Kind::Variable, 0, v.name};
      out.push_back({loc, ComponentKind::IntegerVariable, Expr::variable(v.scalar_names().front())});
    }

  for (std::size_t i = 0; i < pb.ineq.size(); ++i) {
    std::vector<Offender> found;
    offenders(pb.ineq[i].expr, true, ctx, found);
    for (auto& f : found)
      out.push_back({{Location::Kind::Inequality, i, {}}, kind_by_shape(f.term), f.term});
  }

  for (std::size_t j = 0; j < pb.eq.size(); ++j) {
    Curvature c = curvature_of(pb.eq[j].expr, ctx);
    if (c != Curvature::Affine && c != Curvature::Constant)
      out.push_back({{Location::Kind::Equality, j, {}}, ComponentKind::NonaffineEquality, pb.eq[j].expr});
  }

  bool minimize = pb.direction == Direction::Minimize;
  Location obj{Location::Kind::Objective, 0, {}};
  Curvature oc = curvature_of(pb.objective, ctx);
  if (minimize && oc == Curvature::Concave) {
    out.push_back({obj, ComponentKind::ConcaveInMinimize, pb.objective});
  } else if (!minimize && oc == Curvature::Convex) {
    out.push_back({obj, ComponentKind::ConvexInMaximizeViolation, pb.objective});
  } else {
    std::vector<Offender> found;
    offenders(pb.objective, minimize, ctx, found);
    for (auto& f : found) {
      ComponentKind k = kind_by_shape(f.term);
      // A certified term of the wrong curvature, seen from the objective's sense.
      if (f.curvature == Curvature::Concave && f.want_convex == minimize)
        k = ComponentKind::ConcaveInMinimize;
      else if (f.curvature == Curvature::Convex && f.want_convex != minimize)
        k = ComponentKind::ConvexInMaximizeViolation;
      else if (f.curvature == Curvature::Concave || f.curvature == Curvature::Convex)
        k = minimize ? ComponentKind::ConcaveInMinimize : ComponentKind::ConvexInMaximizeViolation;
      out.push_back({obj, k, f.term});
    }
  }
  return out;
}

bool verify_convex(const Problem& pb) {
  SignContext ctx(pb);
  for (const auto& v : pb.variables)
    if (v.discrete()) return false;
  Curvature oc = curvature_of(pb.objective, ctx);
  if (pb.direction == Direction::Minimize ? !is_convex(oc) : !is_concave(oc)) return false;
  for (const auto& g : pb.ineq)
    if (!is_convex(curvature_of(g.expr, ctx))) return false;
  for (const auto& h : pb.eq) {
    Curvature c = curvature_of(h.expr, ctx);
    if (c != Curvature::Affine && c != Curvature::Constant) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Sampling oracle

Verdict sample_convexity_check(const Expr& expr, const BoxDomain& box, std::size_t samples,
                               std::uint64_t seed, const Assignment& params) {
  const std::size_t n = box.names.size();
  if (box.lo.size() != n || box.hi.size() != n) throw Error("box dimensions disagree");
  for (std::size_t k = 0; k < n; ++k)
    if (!std::isfinite(box.lo[k]) || !std::isfinite(box.hi[k]) || box.lo[k] > box.hi[k])
      throw Error("sampling box must be bounded");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Assignment x = params, y = params, z = params;
  std::vector<double> xs(n), ys(n);
  for (std::size_t s = 0; s < samples; ++s) {
    for (std::size_t k = 0; k < n; ++k) {
      xs[k] = box.lo[k] + (box.hi[k] - box.lo[k]) * unit(rng);
      ys[k] = box.lo[k] + (box.hi[k] - box.lo[k]) * unit(rng);
    }
    double lambda = unit(rng);
    if (lambda <= 0.0 || lambda >= 1.0) lambda = 0.5;
    for (std::size_t k = 0; k < n; ++k) {
      x.set(box.names[k], xs[k]);
      y.set(box.names[k], ys[k]);
      z.set(box.names[k], lambda * xs[k] + (1.0 - lambda) * ys[k]);
    }
    double fx = evaluate(expr, x), fy = evaluate(expr, y), fz = evaluate(expr, z);
    double rhs = lambda * fx + (1.0 - lambda) * fy;
    double tol = 1e-9 * std::max({1.0, std::fabs(fx), std::fabs(fy)});
    if (fz > rhs + tol) {
      Verdict v;
      v.violation = true;
      v.lambda = lambda;
      for (std::size_t k = 0; k < n; ++k) {
        v.x.set(box.names[k], xs[k]);
        v.y.set(box.names[k], ys[k]);
      }
      return v;
    }
  }
  return Verdict::none();
}

}  // namespace ncx
