#include <cmath>

#include <gtest/gtest.h>

#include "ncx/tape.hpp"
#include "oracles.hpp"

using namespace ncx;

namespace {

Expr x() { return Expr::variable("x"); }
Expr y() { return Expr::variable("y"); }

}  // namespace

TEST(Expr, EvaluatesArithmetic) {
  Expr e = 3.0 * x() * y() - Expr::pow(x(), 2.0) / (1.0 + y());
  EXPECT_DOUBLE_EQ(evaluate(e, {{"x", 2.0}, {"y", 1.0}}), 6.0 - 2.0);
}

TEST(Expr, MissingBindingThrows) {
  EXPECT_THROW(evaluate(x() + y(), {{"x", 1.0}}), UnboundSymbol);
}

TEST(Expr, DomainErrors) {
  EXPECT_THROW(evaluate(Expr::log(x()), {{"x", 0.0}}), DomainError);
  EXPECT_THROW(evaluate(Expr::sqrt(x()), {{"x", -1.0}}), DomainError);
  EXPECT_THROW(evaluate(Expr::constant(1.0) / x(), {{"x", 0.0}}), DomainError);
  EXPECT_THROW(evaluate(Expr::exp(x()), {{"x", 1000.0}}), DomainError);
  EXPECT_THROW(Expr::div(x(), Expr::constant(0.0)), DomainError);
}

TEST(Expr, AssignmentRejectsNonFinite) {
  Assignment a;
  EXPECT_THROW(a.set("x", NAN), DomainError);
  EXPECT_THROW(a.set("x", INFINITY), DomainError);
}

TEST(Expr, BuildersCollapseTrivialLists) {
  EXPECT_TRUE(Expr::add({}).is_const(0.0));
  EXPECT_TRUE(Expr::mul({}).is_const(1.0));
  EXPECT_EQ(Expr::add({x()}), x());
}

TEST(Expr, GradientOfProduct) {
  auto g = gradient(x() * y() + Expr::exp(x()), {{"x", 0.0}, {"y", 2.0}}, {"x", "y"});
  EXPECT_DOUBLE_EQ(g["x"], 2.0 + 1.0);
  EXPECT_DOUBLE_EQ(g["y"], 0.0);
}

TEST(Expr, AbsSubgradientAtKink) {
  auto g = gradient(Expr::abs(x()), {{"x", 0.0}}, {"x"});
  EXPECT_DOUBLE_EQ(g["x"], 0.0);
}

TEST(Expr, SqrtAtZeroIsNotDifferentiable) {
  EXPECT_THROW(gradient(Expr::sqrt(x()), {{"x", 0.0}}, {"x"}), NonDifferentiable);
}

TEST(Expr, SimplifyFoldsConstants) {
  Expr e = simplify(Expr::add({Expr::constant(0.0), Expr::mul({Expr::constant(1.0), x()}), Expr::constant(2.0) * 3.0}));
  EXPECT_EQ(to_string(e), "6 + x");
  EXPECT_EQ(simplify(e), e);
}

TEST(Expr, SubstituteReplacesByName) {
  Expr e = substitute(x() * y(), {{"x", Expr::constant(2.0)}});
  EXPECT_DOUBLE_EQ(evaluate(e, {{"y", 3.0}}), 6.0);
  EXPECT_EQ(free_vars(e), std::set<std::string>{"y"});
}

TEST(Expr, FormatNumberRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456789.125, -2.5e17}) EXPECT_EQ(std::stod(format_number(v)), v);
  EXPECT_EQ(format_number(2.0), "2");
}

TEST(Tape, MatchesTreeEvaluation) {
  Expr e = Expr::log(1.0 + x() * x()) + Expr::pow(y(), 1.5) - x() / y();
  VariableIndex idx({"x", "y"});
  Tape t = Tape::compile(e, idx, [](std::string_view) { return std::nullopt; });
  std::vector<double> p{0.7, 1.3}, g(2);
  double v = t.value_and_gradient(p, g);
  EXPECT_NEAR(v, evaluate(e, {{"x", 0.7}, {"y", 1.3}}), 1e-15);
  auto sym = gradient(e, {{"x", 0.7}, {"y", 1.3}}, {"x", "y"});
  EXPECT_NEAR(g[0], sym["x"], 1e-14);
  EXPECT_NEAR(g[1], sym["y"], 1e-14);
}

TEST(Tape, UnknownParameterThrows) {
  VariableIndex idx({"x"});
  EXPECT_THROW(Tape::compile(x() * Expr::parameter("a"), idx, [](std::string_view) { return std::nullopt; }),
               UnboundSymbol);
}

TEST(Tape, TryValueReportsDomain) {
  VariableIndex idx({"x"});
  Tape t = Tape::compile(Expr::log(x()), idx, [](std::string_view) { return std::nullopt; });
  std::vector<double> p{-1.0};
  double out = 0;
  EXPECT_EQ(t.try_value(p, out), EvalStatus::Domain);
}

TEST(Tape, GradientsMatchFiniteDifferences) {
  oracle::ExprGen gen(7);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  VariableIndex idx(gen.names());
  for (int k = 0; k < 50; ++k) {
    Expr e = gen.smooth(3);
    Tape t = Tape::compile(e, idx, [](std::string_view) { return std::nullopt; });
    std::vector<double> p{u(rng), u(rng), u(rng)}, g(3);
    t.value_and_gradient(p, g);
    auto fd = oracle::central_difference([&](const std::vector<double>& q) { return t.value(q); }, p);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(g[i], fd[i], 1e-5 * std::max(1.0, std::fabs(g[i]))) << to_string(e);
  }
}
