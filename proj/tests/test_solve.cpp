#include <cmath>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "ncx/model_io.hpp"
#include "ncx/solve.hpp"
#include "oracles.hpp"

using namespace ncx;

namespace {

Problem corpus(const std::string& name) {
  return load_problem_file(std::string(NCX_SOURCE_DIR) + "/corpus/problems/" + name + ".ncx");
}

Solution solve_text(const std::string& text) {
  Problem pb = parse_problem(text);
  ConvexProblem cp(pb, {}, nullptr);
  return solve(cp, default_reference_point(pb));
}

}  // namespace

TEST(Backend, SelectionFollowsCurvature) {
  EXPECT_EQ(select_backend(ConvexProblem(corpus("lp_production"), {}, nullptr)), BackendId::internal_affine());
  EXPECT_EQ(select_backend(ConvexProblem(corpus("case_study"), {}, nullptr)), BackendId::internal_barrier());
  EXPECT_EQ(select_backend(ConvexProblem(corpus("case_study"), {}, nullptr), "cvxpy"), BackendId::script("cvxpy"));
}

TEST(Backend, NamesRoundTrip) {
  for (const auto& b : {BackendId::internal_affine(), BackendId::internal_barrier(), BackendId::script("scipy")})
    EXPECT_EQ(BackendId::parse(b.to_string()), b);
  EXPECT_THROW(BackendId::script("mosek"), UnsupportedBackend);
}

TEST(Backend, ScriptsAreNotRunInProcess) {
  ConvexProblem cp(corpus("lp_production"), {}, nullptr);
  EXPECT_THROW(solve_with(BackendId::script("scipy"), cp, default_reference_point(cp.problem())), UnsupportedBackend);
}

TEST(Options, Validation) {
  SolveOptions o;
  o.tolerance = 0;
  EXPECT_THROW(o.validate(), Error);
  o = {};
  o.max_iterations = 0;
  EXPECT_THROW(o.validate(), Error);
}

TEST(Solve, AnalyticConvexSuite) {
  for (const auto& c : oracle::analytic_cases()) {
    Solution s = solve_text(c.text);
    ASSERT_TRUE(s.x.has_value()) << c.name << ": " << s.message;
    EXPECT_EQ(s.status, SolveStatus::Optimal) << c.name;
    EXPECT_NEAR(*s.objective, c.value, 1e-5) << c.name;
    for (const auto& [n, v] : c.x) EXPECT_NEAR(s.x->at(n), v, 1e-4) << c.name << " " << n;
  }
}

TEST(Solve, CaseStudy) {
  Problem pb = corpus("case_study");
  Solution s = solve(ConvexProblem(pb, {}, nullptr), default_reference_point(pb));
  ASSERT_EQ(s.status, SolveStatus::Optimal);
  EXPECT_NEAR(*s.objective, 5.0 * std::log2(1.0 + 2.0 / 0.001), 1e-6);
  for (const auto& [k, v] : *s.x) EXPECT_NEAR(v, 2.0, 1e-6) << k;
}

TEST(Solve, InconsistentRowsAreInfeasible) {
  EXPECT_EQ(solve_text("var x continuous in [0, 1]\nminimize x\nsubject to\n  c: x >= 2").status,
            SolveStatus::Infeasible);
  EXPECT_EQ(solve_text("var x continuous in [-5, 5]\nminimize x^2\nsubject to\n  c: x^2 + 1 <= 0").status,
            SolveStatus::Infeasible);
}

TEST(Solve, UnboundedLp) {
  Solution s = solve_text("var x continuous\nminimize x");
  EXPECT_EQ(s.status, SolveStatus::NumericalFailure);
  EXPECT_FALSE(s.x.has_value());
}

TEST(Solve, UnboundParameter) {
  Problem pb = corpus("fault_unbound");
  EXPECT_THROW(solve(ConvexProblem(pb, {}, nullptr), default_reference_point(pb)), UnboundSymbol);
}

TEST(Solve, Residuals) {
  Problem pb = corpus("lp_production");
  Residuals r = feasibility_residuals(pb, {{"x[1]", 6.0}, {"x[2]", 0.0}});
  EXPECT_DOUBLE_EQ(r.max_ineq, 4.0);
  EXPECT_DOUBLE_EQ(r.max_eq, 0.0);
}

TEST(Sca, BilinearMatchesGrid) {
  double best = INFINITY;
  for (int i = 0; i <= 400; ++i)
    for (int j = 0; j <= 400; ++j) best = std::min(best, (1.0 + i / 400.0) * (1.0 + j / 400.0));
  ScaResult r = sca_solve(corpus("bilinear"));
  ASSERT_TRUE(r.solution.x.has_value());
  EXPECT_NEAR(*r.solution.objective, best, 1e-3);
}

TEST(Sca, QuarticReachesWell) {
  ScaResult r = sca_solve(corpus("quartic"));
  ASSERT_TRUE(r.solution.x.has_value());
  EXPECT_NEAR(r.solution.x->at("x"), 1.0, 1e-3);
  EXPECT_FALSE(r.trace.empty());
}

TEST(Sca, ConvexInputSolvesOnce) {
  ScaResult r = sca_solve(corpus("case_study"));
  EXPECT_EQ(r.trace.size(), 1u);
  EXPECT_EQ(r.solution.status, SolveStatus::Optimal);
}

TEST(Sca, ObjectiveNeverWorsensOnAcceptedSteps) {
  ScaResult r = sca_solve(corpus("interference"));
  ASSERT_TRUE(r.solution.x.has_value());
  double prev = -INFINITY;
  for (const auto& s : r.trace) {
    if (!s.accepted) continue;
    EXPECT_GE(s.objective, prev - 1e-9 * std::max(1.0, std::fabs(prev)));
    prev = s.objective;
  }
}

TEST(Script, ScipyGolden) {
  std::ifstream in(std::string(NCX_SOURCE_DIR) + "/tests/fixtures/case_study_scipy.py");
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(emit_script(ConvexProblem(corpus("case_study"), {}, nullptr), BackendId::script("scipy")), ss.str());
}

TEST(Script, CvxpyUsesAtoms) {
  std::string s = emit_script(ConvexProblem(corpus("case_study"), {}, nullptr), BackendId::script("cvxpy"));
  EXPECT_NE(s.find("cp.Maximize"), std::string::npos);
  EXPECT_NE(s.find("cp.log("), std::string::npos);
}

TEST(Script, GurobiRejectsLogs) {
  try {
    emit_script(ConvexProblem(corpus("case_study"), {}, nullptr), BackendId::script("gurobi"));
    FAIL() << "expected UnsupportedAtom";
  } catch (const UnsupportedAtom& e) {
    EXPECT_EQ(e.kind(), NodeKind::Log2);
  }
}

TEST(Script, GurobiLinear) {
  std::string s = emit_script(ConvexProblem(corpus("lp_production"), {}, nullptr), BackendId::script("gurobi"));
  EXPECT_NE(s.find("GRB.MAXIMIZE"), std::string::npos);
}
