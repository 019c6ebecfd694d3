#include <cstdlib>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "ncx/gateway.hpp"
#include "ncx/pipeline.hpp"

using namespace ncx;

namespace {

std::string src(const std::string& rel) { return std::string(NCX_SOURCE_DIR) + "/" + rel; }

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::shared_ptr<ConfiguredGateway> replay() {
  return std::make_shared<ConfiguredGateway>(GatewayConfig::load(src("tests/fixtures/replay.toml")));
}

}  // namespace

TEST(Templates, MathQueryRendersDescription) {
  auto r = render_prompt(builtin_template(TemplateId::MathQuery), "five users share a budget");
  EXPECT_NE(r.text.find("construct a complete mathematical formula"), std::string::npos);
  EXPECT_NE(r.text.find("five users share a budget"), std::string::npos);
  EXPECT_EQ(r.text.find(kInputPlaceholder), std::string::npos);
  EXPECT_TRUE(r.warnings.empty());
}

TEST(Templates, EmptyInputWarns) {
  auto r = render_prompt(builtin_template(TemplateId::MathQuery), "");
  EXPECT_FALSE(r.warnings.empty());
}

TEST(Templates, OnlyThePlaceholderChanges) {
  const auto& t = builtin_template(TemplateId::RepairQuery);
  auto r = render_prompt(t, "XYZ");
  auto at = t.user.find(kInputPlaceholder);
  EXPECT_EQ(r.text.substr(0, at), t.user.substr(0, at));
  EXPECT_EQ(r.text.substr(at + 3), t.user.substr(at + kInputPlaceholder.size()));
}

TEST(Templates, PlaceholderCountIsChecked) {
  EXPECT_THROW(PromptTemplate::make(TemplateId::CodeQuery, "", "$input$ and $input$", ReplyContract::FreeText),
               MissingPlaceholder);
  EXPECT_THROW(PromptTemplate::make(TemplateId::CodeQuery, "", "nothing", ReplyContract::FreeText), MissingPlaceholder);
}

TEST(Templates, EveryBuiltinIsWellFormed) {
  for (auto id : {TemplateId::MathQuery, TemplateId::ConvexQuery, TemplateId::CodeQuery, TemplateId::ExecuteCodeQuery,
                  TemplateId::FeasibilityCheckQuery, TemplateId::RepairQuery, TemplateId::ConsistencyQuery}) {
    const auto& t = builtin_template(id);
    EXPECT_EQ(t.id, id);
    EXPECT_EQ(template_from_string(to_string(id)), id);
  }
}

TEST(Contract, Binary) {
  EXPECT_EQ(enforce_contract(ReplyContract::Binary01, " 1\n"), "1");
  EXPECT_EQ(enforce_contract(ReplyContract::Binary01, "0"), "0");
  EXPECT_THROW(enforce_contract(ReplyContract::Binary01, "yes"), ContractViolation);
}

TEST(Contract, DslNeedsFence) {
  EXPECT_NO_THROW(enforce_contract(ReplyContract::Dsl, "here\n```\nvar x continuous\nminimize x\n```"));
  EXPECT_THROW(enforce_contract(ReplyContract::Dsl, "no fence"), ContractViolation);
}

TEST(Contract, FencedBlock) {
  EXPECT_EQ(fenced_block("a\n```json\n{\"k\": 1}\n```\nb"), "{\"k\": 1}\n");
  EXPECT_EQ(fenced_block("none"), std::nullopt);
}

TEST(Hashing, Sha256) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Config, ModeRequirements) {
  GatewayConfig c;
  c.mode = GatewayMode::Replay;
  EXPECT_THROW(c.validate(), Error);
  c.mode = GatewayMode::Live;
  EXPECT_THROW(c.validate(), Error);
  c.endpoint = "http://localhost:1/v1/chat/completions";
  EXPECT_NO_THROW(c.validate());
}

TEST(Replay, CaseStudyExtraction) {
  auto g = replay();
  auto ex = extract_from_nl(NlDescription(slurp(src("corpus/descriptions/case_study.txt"))), *g, 3);
  EXPECT_EQ(ex.rounds, 1);
  EXPECT_EQ(ex.problem, load_problem_file(src("corpus/problems/case_study.ncx")));
  EXPECT_TRUE(ex.report.alignment);
  EXPECT_FALSE(ex.report.alignment_skipped);
  auto tr = g->transcript();
  ASSERT_EQ(tr.size(), 2u);
  EXPECT_EQ(tr[0].template_id, TemplateId::MathQuery);
  EXPECT_EQ(tr[1].template_id, TemplateId::ConsistencyQuery);
}

TEST(Replay, SecondRoundAfterSyntaxError) {
  auto g = replay();
  auto ex = extract_from_nl(NlDescription(slurp(src("corpus/descriptions/qp_centroid.txt"))), *g, 3);
  EXPECT_EQ(ex.rounds, 2);
  EXPECT_EQ(ex.problem.name, "qp_centroid");
}

TEST(Replay, OneRoundIsNotEnough) {
  auto g = replay();
  EXPECT_THROW(extract_from_nl(NlDescription(slurp(src("corpus/descriptions/qp_centroid.txt"))), *g, 1),
               ExtractionFailed);
}

TEST(Replay, MissIsReported) {
  auto g = replay();
  EXPECT_THROW(g->complete(builtin_template(TemplateId::MathQuery), "never recorded"), FixtureMiss);
}

TEST(Replay, Deterministic) {
  auto a = replay(), b = replay();
  std::string desc = slurp(src("corpus/descriptions/case_study.txt"));
  auto ea = extract_from_nl(NlDescription(desc), *a, 3);
  auto eb = extract_from_nl(NlDescription(desc), *b, 3);
  EXPECT_EQ(ea.problem, eb.problem);
  EXPECT_EQ(a->transcript()[0].reply, b->transcript()[0].reply);
}

TEST(Replay, PipelineFromDescription) {
  PipelineConfig cfg;
  cfg.gateway = replay();
  PipelineResult r = run(NlDescription(slurp(src("corpus/descriptions/case_study.txt"))), cfg);
  EXPECT_TRUE(r.success_flag);
  EXPECT_NEAR(*r.objective, 54.8325, 1e-3);
}

TEST(Replay, GatewayRepairSuggestion) {
  PipelineConfig cfg;
  cfg.gateway = replay();
  PipelineResult r = run(load_problem_file(src("corpus/problems/infeasible_box.ncx")), cfg);
  EXPECT_FALSE(r.execute_flag);
  ASSERT_EQ(r.ecl_trace.size(), 2u);
  EXPECT_EQ(r.ecl_trace[0].repair.kind, RepairAction::Kind::Restore);
  EXPECT_EQ(r.ecl_trace[1].repair.source, "gateway");
  EXPECT_EQ(r.ecl_trace[1].repair.kind, RepairAction::Kind::NoRepair);
}

TEST(Secrets, KeyNeverLeaks) {
  setenv("NCX_TEST_SECRET", "sk-do-not-print", 1);
  GatewayConfig c;
  c.mode = GatewayMode::Live;
  c.endpoint = "http://127.0.0.1:9/v1/chat/completions";
  c.api_key_env = "NCX_TEST_SECRET";
  c.timeout = std::chrono::milliseconds(200);
  c.max_retries = 0;
  ConfiguredGateway g(c);
  try {
    g.complete(builtin_template(TemplateId::FeasibilityCheckQuery), "x");
    FAIL() << "nothing listens on port 9";
  } catch (const GatewayError& e) {
    EXPECT_EQ(std::string(e.what()).find("sk-do-not-print"), std::string::npos);
  }
  for (const auto& t : g.transcript()) EXPECT_EQ(t.reply.find("sk-do-not-print"), std::string::npos);
}
