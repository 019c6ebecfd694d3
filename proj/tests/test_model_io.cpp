#include <filesystem>

#include <gtest/gtest.h>

#include "ncx/model_io.hpp"

using namespace ncx;

namespace {

const char* kSmall = R"(problem small
param a = 2
param w[2] = [1, 3]
var x[2] continuous in [0, 4]
var k integer in [0, 5]
var b binary
minimize sum(w[i] * x[i], i, 1, 2) + a * k - b
subject to
  cap: x[i] <= a for i in 1..2
  link: x[1] + k == 3
  floor: x[1] + x[2] >= 1
)";

std::string corpus_dir() { return std::string(NCX_SOURCE_DIR) + "/corpus/problems"; }

}  // namespace

TEST(Dsl, ExpandsFamiliesIntoRows) {
  Problem pb = parse_problem(kSmall);
  EXPECT_EQ(pb.name, "small");
  EXPECT_EQ(pb.direction, Direction::Minimize);
  ASSERT_EQ(pb.ineq.size(), 3u);
  ASSERT_EQ(pb.eq.size(), 1u);
  EXPECT_EQ(pb.ineq[0].group, "cap");
  EXPECT_EQ(pb.ineq[1].group, "cap");
  EXPECT_EQ(pb.scalar_variables().size(), 4u);
  // x[1] - a <= 0 at x[1] = 2 is tight
  Assignment at = pb.bind({{"x[1]", 2.0}, {"x[2]", 0.0}, {"k", 1.0}, {"b", 0.0}});
  EXPECT_DOUBLE_EQ(evaluate(pb.ineq[0].expr, at), 0.0);
  // >= rows are normalized to rhs - lhs <= 0
  EXPECT_DOUBLE_EQ(evaluate(pb.ineq[2].expr, at), 1.0 - 2.0);
}

TEST(Dsl, RoundTripsThroughText) {
  Problem pb = parse_problem(kSmall);
  EXPECT_EQ(parse_problem(emit_dsl(pb)), pb);
}

TEST(Dsl, RoundTripsThroughJson) {
  Problem pb = parse_problem(kSmall);
  EXPECT_EQ(parse_json(emit_json(pb)), pb);
  EXPECT_EQ(emit_json(parse_json(emit_json(pb))), emit_json(pb));
}

TEST(Dsl, CorpusFilesRoundTrip) {
  for (const auto& entry : std::filesystem::directory_iterator(corpus_dir())) {
    Problem pb = load_problem_file(entry.path().string());
    EXPECT_EQ(parse_problem(emit_dsl(pb)), pb) << entry.path();
    EXPECT_EQ(parse_json(emit_json(pb)), pb) << entry.path();
  }
}

TEST(Dsl, SyntaxErrorCarriesPosition) {
  try {
    parse_problem("var x continuous\nminimize (x + \n");
    FAIL() << "expected a syntax error";
  } catch (const SyntaxError& e) {
    EXPECT_GE(e.line(), 2);
    EXPECT_GT(e.col(), 0);
  }
}

TEST(Dsl, UndeclaredSymbol) {
  EXPECT_THROW(parse_problem("var x continuous\nminimize x + y"), UndeclaredSymbol);
}

TEST(Dsl, DuplicateDeclaration) {
  EXPECT_THROW(parse_problem("var x continuous\nvar x continuous\nminimize x"), DuplicateDeclaration);
}

TEST(Dsl, InvertedBounds) {
  EXPECT_THROW(parse_problem("var x continuous in [2, 1]\nminimize x"), BoundViolation);
}

TEST(Dsl, MaximizeDirection) {
  Problem pb = parse_problem("var x continuous in [0, 1]\nmaximize x");
  EXPECT_EQ(pb.direction, Direction::Maximize);
}

TEST(Json, SchemaErrorNamesThePath) {
  try {
    parse_json(R"({"name": "p", "direction": "sideways", "variables": [], "objective": "0"})");
    FAIL() << "expected a schema error";
  } catch (const SchemaError& e) {
    EXPECT_FALSE(e.path().empty());
  }
}

TEST(Json, ParseAnyChoosesByFirstByte) {
  Problem pb = parse_problem(kSmall);
  EXPECT_EQ(parse_any("  " + emit_json(pb)), pb);
  EXPECT_EQ(parse_any(kSmall), pb);
}

TEST(Consistency, FlagsUnusedVariable) {
  Problem pb = parse_problem("var x continuous\nvar y continuous\nminimize x^2");
  auto r = validate_consistency(pb);
  EXPECT_FALSE(r.completeness);
  EXPECT_FALSE(r.consistent());
  EXPECT_TRUE(r.alignment_skipped);
}

TEST(Consistency, CaseStudyIsConsistent) {
  auto r = validate_consistency(load_problem_file(corpus_dir() + "/case_study.ncx"));
  EXPECT_TRUE(r.consistent());
}

TEST(Consistency, UnboundParameterIsNotFatal) {
  auto r = validate_consistency(load_problem_file(corpus_dir() + "/fault_unbound.ncx"));
  EXPECT_TRUE(r.type_correctness);
}

TEST(Extraction, OptimizationFlagMarker) {
  EXPECT_EQ(optimization_flag("text [Optimization Flag: 1] more"), Direction::Maximize);
  EXPECT_EQ(optimization_flag("[optimization flag:0]"), Direction::Minimize);
  EXPECT_EQ(optimization_flag("no marker"), std::nullopt);
}
