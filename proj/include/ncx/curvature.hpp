#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ncx/problem.hpp"

namespace ncx {

/// Certification lattice. Unknown means "not certified", never "non-convex".
enum class Curvature { Constant, Affine, Convex, Concave, Unknown };

enum class Sign { Positive, Negative, Nonneg, Nonpos, Unknown };

std::string_view to_string(Curvature c);
std::string_view to_string(Sign s);

bool is_convex(Curvature c) noexcept;
bool is_concave(Curvature c) noexcept;
/// Curvature of the negation.
Curvature dual(Curvature c) noexcept;

/// Closed interval, possibly unbounded.
struct Interval {
  double lo = -kInf;
  double hi = kInf;
};

/// Variable ranges and parameter values that signs are derived from.
class SignContext {
 public:
  SignContext() = default;
  /// Declared bounds of every scalar variable and every valued parameter.
  explicit SignContext(const Problem& pb);

  void set_range(const std::string& var, Interval r) { ranges_[var] = r; }
  void set_param(const std::string& name, double v) { params_[name] = v; }

  Interval range_of_var(std::string_view name) const;
  /// Unbound parameters have the whole real line as range.
  Interval range_of_param(std::string_view name) const;

 private:
  std::map<std::string, Interval, std::less<>> ranges_;
  std::map<std::string, double, std::less<>> params_;
};

/// Sound enclosure of the values `e` takes on the context's box.
Interval range_of(const Expr& e, const SignContext& ctx);
Sign sign_of(const Expr& e, const SignContext& ctx);

/// Composition-rule certification of `e` on the context's domain.
Curvature curvature_of(const Expr& e, const SignContext& ctx = {});

enum class ComponentKind {
  BilinearProduct,
  FractionalRatio,
  ConcaveInMinimize,
  ConvexInMaximizeViolation,
  NonaffineEquality,
  IntegerVariable,
  UnknownCurvatureTerm,
};

std::string_view to_string(ComponentKind k);

struct Location {
  enum class Kind { Objective, Inequality, Equality, Variable };
  Kind kind = Kind::Objective;
  /// Row index for constraints.
  std::size_t index = 0;
  /// Family name for variables.
  std::string variable;

  std::string describe() const;
  friend bool operator==(const Location&, const Location&) = default;
  friend auto operator<=>(const Location&, const Location&) = default;
};

struct NonconvexComponent {
  Location location;
  ComponentKind kind;
  /// Offending subexpression; the whole row for equalities, a variable for
  /// integer families.
  Expr term;
};

/// Components in the order variables, inequalities, equalities, objective.
std::vector<NonconvexComponent> detect_nonconvex(const Problem& pb);

bool verify_convex(const Problem& pb);

struct BoxDomain {
  std::vector<std::string> names;
  std::vector<double> lo;
  std::vector<double> hi;
};

struct Verdict {
  bool violation = false;
  Assignment x;
  Assignment y;
  double lambda = 0.0;

  static Verdict none() { return {}; }
};

/// Searches for a pair (x, y) and lambda in (0, 1) with
/// f(lambda x + (1 - lambda) y) > lambda f(x) + (1 - lambda) f(y) + tol, where
/// tol = 1e-9 * max(1, |f(x)|, |f(y)|). Throws DomainError from evaluation and
/// Error when the box is unbounded.
Verdict sample_convexity_check(const Expr& expr, const BoxDomain& box, std::size_t samples,
                               std::uint64_t seed, const Assignment& params = {});

}  // namespace ncx
