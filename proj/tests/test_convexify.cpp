#include <cmath>

#include <gtest/gtest.h>

#include "ncx/convexify.hpp"
#include "ncx/model_io.hpp"

using namespace ncx;

namespace {

Problem corpus(const std::string& name) {
  return load_problem_file(std::string(NCX_SOURCE_DIR) + "/corpus/problems/" + name + ".ncx");
}

Expr x() { return Expr::variable("x"); }
Expr y() { return Expr::variable("y"); }

}  // namespace

TEST(Linearize, TangentAtExpansionPoint) {
  Expr f = x() * y() + Expr::exp(x());
  Assignment x0{{"x", 0.3}, {"y", -1.2}};
  Expr t = sca_linearize(f, x0);
  EXPECT_NEAR(evaluate(t, x0), evaluate(f, x0), 1e-15);
  auto gf = gradient(f, x0, {"x", "y"});
  // the surrogate is affine, so a unit step recovers its slope exactly
  for (const auto& v : {"x", "y"}) {
    Assignment x1 = x0;
    x1.set(v, x0.at(v) + 1.0);
    EXPECT_NEAR(evaluate(t, x1) - evaluate(t, x0), gf[v], 1e-12);
  }
}

TEST(Linearize, NeedsEveryBinding) {
  EXPECT_THROW(sca_linearize(x() * y(), {{"x", 1.0}}), UnboundSymbol);
}

TEST(Linearize, KinkIsNotDifferentiable) {
  EXPECT_THROW(sca_linearize(Expr::sqrt(x()), {{"x", 0.0}}), NonDifferentiable);
}

TEST(Ratio, ThresholdRearranges) {
  SignContext ctx;
  ctx.set_range("x", {0.0, 2.0});
  ctx.set_range("y", {0.0, 2.0});
  Expr con = 0.5 - x() / (y() + 1.0);
  Expr r = rearrange_ratio(con, ctx);
  EXPECT_EQ(curvature_of(r, ctx), Curvature::Affine);
  for (double xv : {0.0, 0.7, 2.0})
    for (double yv : {0.0, 1.0, 2.0}) {
      Assignment a{{"x", xv}, {"y", yv}};
      EXPECT_EQ(evaluate(r, a) <= 0, evaluate(con, a) <= 0);
    }
}

TEST(Ratio, UncertifiedDenominator) {
  SignContext ctx;
  ctx.set_range("x", {0.0, 2.0});
  ctx.set_range("y", {-1.0, 2.0});
  EXPECT_THROW(rearrange_ratio(0.5 - x() / y(), ctx), SignUncertifiable);
}

TEST(Ratio, WrongShape) {
  SignContext ctx;
  EXPECT_THROW(rearrange_ratio(x() * y() - 1.0, ctx), ShapeMismatch);
}

TEST(Relax, BinaryBecomesUnitInterval) {
  Problem r = relax_integrality(corpus("binary_pick"));
  for (const auto& v : r.variables) {
    EXPECT_EQ(v.kind, VarKind::Continuous);
    EXPECT_EQ(v.lb, 0.0);
    EXPECT_EQ(v.ub, 1.0);
  }
}

TEST(Reference, MidpointAndHalfBounded) {
  Problem pb = parse_problem(
      "var a continuous in [0, 4]\nvar b continuous in [1, inf]\nvar c continuous in [-inf, 3]\nvar d continuous\n"
      "minimize a + b - c + d^2");
  Assignment r = default_reference_point(pb);
  EXPECT_NEAR(r.at("a"), 2.0, 1e-12);
  EXPECT_NEAR(r.at("b"), 2.0, 1e-12);
  EXPECT_NEAR(r.at("c"), 2.0, 1e-12);
  EXPECT_NEAR(r.at("d"), 0.0, 1e-12);
}

TEST(Convexify, ConvexInputIsUntouched) {
  Problem pb = corpus("case_study");
  ConvexProblem cp = convexify_problem(pb, default_reference_point(pb));
  EXPECT_TRUE(cp.record().empty());
  EXPECT_FALSE(cp.record().reference.has_value());
  EXPECT_EQ(cp.problem(), pb);
}

TEST(Convexify, InterferenceRecord) {
  Problem pb = corpus("interference");
  ConvexProblem cp = convexify_problem(pb, default_reference_point(pb));
  EXPECT_TRUE(verify_convex(cp.problem()));
  std::map<Strategy, int> counts;
  for (const auto& e : cp.record().entries) ++counts[e.strategy];
  EXPECT_EQ(counts[Strategy::BinaryRelaxation], 1);
  EXPECT_EQ(counts[Strategy::RatioRearrange], 3);
  EXPECT_GE(counts[Strategy::SCA], 1);
  EXPECT_TRUE(cp.record().reference.has_value());
  EXPECT_EQ(cp.original(), pb);
}

TEST(Convexify, BilinearBecomesAffine) {
  Problem pb = corpus("bilinear");
  ConvexProblem cp = convexify_problem(pb, {{"x[1]", 1.5}, {"x[2]", 1.5}});
  ASSERT_EQ(cp.record().entries.size(), 1u);
  EXPECT_EQ(cp.record().entries[0].strategy, Strategy::SCA);
  EXPECT_EQ(curvature_of(cp.problem().objective), Curvature::Affine);
}

TEST(Convexify, AbsInMinimizeIsLifted) {
  Problem pb = parse_problem(
      "var x continuous in [-3, 3]\nvar y continuous in [-3, 3]\nminimize abs(x * y - 1) + x^2");
  ConvexProblem cp = convexify_problem(pb, {{"x", 0.5}, {"y", 0.5}});
  bool lifted = false;
  for (const auto& e : cp.record().entries) lifted |= e.strategy == Strategy::EpigraphLift;
  EXPECT_TRUE(lifted);
  EXPECT_GT(cp.problem().scalar_variables().size(), pb.scalar_variables().size());
}

TEST(Convexify, EpigraphCanBeDisabled) {
  Problem pb = parse_problem(
      "var x continuous in [-3, 3]\nvar y continuous in [-3, 3]\nminimize abs(x * y - 1) + x^2");
  ConvexifyPolicy pol;
  pol.allow_epigraph = false;
  ConvexProblem cp = convexify_problem(pb, {{"x", 0.5}, {"y", 0.5}}, pol);
  for (const auto& e : cp.record().entries) EXPECT_NE(e.strategy, Strategy::EpigraphLift);
}

TEST(Convexify, UnimplementedOverride) {
  ConvexifyPolicy pol;
  pol.overrides[ComponentKind::BilinearProduct] = Strategy::SDR;
  EXPECT_THROW(convexify_problem(corpus("bilinear"), {{"x[1]", 1.5}, {"x[2]", 1.5}}, pol), Unimplemented);
}

TEST(Convexify, ReferenceOutsideBox) {
  EXPECT_THROW(convexify_problem(corpus("bilinear"), {{"x[1]", 5.0}, {"x[2]", 1.5}}), BoundViolation);
}

TEST(Convexify, ReferenceMissingVariable) {
  EXPECT_THROW(convexify_problem(corpus("bilinear"), {{"x[1]", 1.5}}), UnboundSymbol);
}

TEST(Convexify, PartialLinearizationKeepsConvexPart) {
  Problem pb = parse_problem("var x continuous in [1, 2]\nvar y continuous in [1, 2]\nminimize x * y + exp(x)");
  ConvexifyPolicy pol;
  pol.partial_linearization = true;
  ConvexProblem cp = convexify_problem(pb, {{"x", 1.5}, {"y", 1.5}}, pol);
  EXPECT_TRUE(contains_kind(cp.problem().objective, NodeKind::Exp));
}

TEST(Convexify, SurrogateTangentToEveryScaEntry) {
  for (const char* name : {"bilinear", "quartic", "qos_ratio", "interference", "seeded_ring", "seeded_sq_3"}) {
    Problem pb = corpus(name);
    Assignment x0 = default_reference_point(pb);
    ConvexProblem cp = convexify_problem(pb, x0);
    for (const auto& e : cp.record().entries) {
      if (e.strategy != Strategy::SCA) continue;
      ASSERT_TRUE(e.reference.has_value());
      Assignment at = pb.bind(*e.reference);
      double fb = evaluate(e.before, at);
      EXPECT_NEAR(evaluate(e.after, at), fb, 1e-12 * std::max(1.0, std::fabs(fb))) << name;
    }
  }
}
