// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "ncx/eval.hpp"
#include "oracles.hpp"

using namespace ncx;
namespace fs = std::filesystem;

namespace {

std::string src(const std::string& rel) { return std::string(NCX_SOURCE_DIR) + "/" + rel; }

Problem corpus(const std::string& name) { return load_problem_file(src("corpus/problems/" + name + ".ncx")); }

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Check {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& why) {
    if (!cond && ok) detail = why;
    ok = ok && cond;
  }
};

int failures = 0;

void report(int id, const std::string& title, const Check& c, const std::string& summary) {
  if (!c.ok) ++failures;
  std::cout << (c.ok ? "PASS" : "FAIL") << "  [" << id << "] " << title << ": " << (c.ok ? summary : c.detail)
            << std::endl;
}

template <class F>
void criterion(int id, const std::string& title, F body) {
  Check c;
  std::string summary;
  try {
    summary = body(c);
  } catch (const std::exception& e) {
    c.require(false, std::string("unexpected exception: ") + e.what());
  }
  report(id, title, c, summary);
}

std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::string without_timings(const PipelineResult& r) {
  auto j = nlohmann::json::parse(report_json(r));
  j.erase("timings");
  return j.dump();
}

// 1
std::string case_study(Check& c) {
  PipelineResult r = run(corpus("case_study"), {});
  c.require(r.success_flag && r.execute_flag, "flags not both 1");
  c.require(r.objective && std::fabs(*r.objective - 54.8325) <= 1e-3, "objective off");
  for (int i = 1; i <= 5; ++i)
    c.require(r.x && std::fabs(r.x->at("p[" + std::to_string(i) + "]") - 2.0) <= 1e-4, "x off at p[" + std::to_string(i) + "]");

  auto t0 = std::chrono::steady_clock::now();
  std::string cmd = std::string(NCX_CLI) + " solve " + src("corpus/problems/case_study.ncx");
  FILE* pipe = popen(cmd.c_str(), "r");
  c.require(pipe != nullptr, "cannot start the CLI");
  std::string out;
  std::array<char, 256> buf{};
  while (pipe && fgets(buf.data(), buf.size(), pipe)) out += buf.data();
  int status = pipe ? pclose(pipe) : -1;
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.require(status == 0, "CLI exit status " + std::to_string(status));
  c.require(out.find("success_flag 1") != std::string::npos && out.find("execute_flag 1") != std::string::npos,
            "CLI flags missing");
  auto at = out.find("objective ");
  c.require(at != std::string::npos && std::fabs(std::stod(out.substr(at + 10)) - 54.8325) <= 1e-3,
            "CLI objective off");
  c.require(secs < 1.0, "CLI took " + fmt(secs) + " s");
  return "objective " + fmt(*r.objective, 9) + ", x = [2,2,2,2,2], CLI " + fmt(secs, 3) + " s";
}

// 2
std::string gradient_oracle(Check& c) {
  oracle::ExprGen gen(2024);
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  const auto names = gen.names();
  VariableIndex idx(names);
  std::set<std::string> vars(names.begin(), names.end());
  double worst = 0.0;
  int n = 0;
  for (int k = 0; k < 200; ++k) {
    Expr e = gen.smooth(1 + k % 4);
    Tape t = Tape::compile(e, idx, [](std::string_view) { return std::nullopt; });
    for (int p = 0; p < 10; ++p) {
      std::vector<double> x{u(rng), u(rng), u(rng)}, g(3);
      t.value_and_gradient(x, g);
      auto sym = gradient(e, idx.unpack(x), vars);
      auto fd = oracle::central_difference(
          [&](const std::vector<double>& q) { return evaluate(e, idx.unpack(q)); }, x);
      for (int i = 0; i < 3; ++i) {
        double scale = std::max(1.0, std::fabs(fd[i]));
        double err = std::max(std::fabs(g[i] - fd[i]), std::fabs(sym[idx.name(i)] - fd[i])) / scale;
        worst = std::max(worst, err);
        c.require(err <= 1e-5, "gradient mismatch on " + to_string(e));
      }
      ++n;
    }
  }
  return "200 expressions x 10 points, worst relative error " + fmt(worst, 3);
}

// 3
std::string curvature_soundness(Check& c) {
  oracle::ExprGen gen(77);
  SignContext ctx;
  BoxDomain box{gen.names(), {0.5, 0.5, 0.5}, {2.0, 2.0, 2.0}};
  for (const auto& n : gen.names()) ctx.set_range(n, {0.5, 2.0});
  int certified = 0, tried = 0;
  for (int k = 0; certified < 60 && k < 2000; ++k) {
    Expr e = k % 3 ? gen.dcp_like(1 + k % 3) : gen.smooth(1 + k % 3);
    ++tried;
    Curvature cv = curvature_of(e, ctx);
    if (!is_convex(cv) && !is_concave(cv)) continue;
    if (cv == Curvature::Constant) continue;
    ++certified;
    Expr f = is_convex(cv) ? e : -e;
    for (std::uint64_t seed = 1; seed <= 5; ++seed)
      c.require(!sample_convexity_check(f, box, 10000, seed).violation,
                "violation on certified " + std::string(to_string(cv)) + " " + to_string(e));
  }
  // rows of the bundled problems, on their own boxes
  int rows = 0;
  for (const char* name : {"case_study", "qp_centroid", "lp_production"}) {
    Problem pb = corpus(name);
    SignContext pctx(pb);
    BoxDomain pbox;
    for (const auto& v : pb.scalar_variables()) {
      pbox.names.push_back(v.name);
      pbox.lo.push_back(v.lb);
      pbox.hi.push_back(v.ub);
    }
    std::vector<Expr> exprs{pb.direction == Direction::Maximize ? -pb.objective : pb.objective};
    for (const auto& r : pb.ineq) exprs.push_back(r.expr);
    for (const auto& e : exprs) {
      if (!is_convex(curvature_of(e, pctx))) continue;
      ++rows;
      for (std::uint64_t seed = 1; seed <= 5; ++seed)
        c.require(!sample_convexity_check(e, pbox, 10000, seed, pb.param_assignment()).violation,
                  std::string("violation in ") + name);
    }
  }
  c.require(certified >= 50, "only " + std::to_string(certified) + " certified expressions");
  return std::to_string(certified) + " certified expressions (of " + std::to_string(tried) + ") and " +
         std::to_string(rows) + " problem rows, 1e4 samples x 5 seeds, no violations";
}

// 4
std::string sca_tangency(Check& c) {
  int entries = 0;
  double worst_v = 0, worst_g = 0;
  std::mt19937_64 rng(5);
  auto check_record = [&](const Problem& pb, const TransformRecord& rec) {
    for (const auto& e : rec.entries) {
      if (e.strategy != Strategy::SCA) continue;
      ++entries;
      Assignment at = pb.bind(*e.reference);
      double fb = evaluate(e.before, at), fa = evaluate(e.after, at);
      double dv = std::fabs(fa - fb) / std::max(1.0, std::fabs(fb));
      worst_v = std::max(worst_v, dv);
      c.require(dv <= 1e-12, "value gap at " + e.component.location.describe());
      std::set<std::string> vars;
      for (const auto& v : pb.scalar_variables()) vars.insert(v.name);
      auto gb = gradient(e.before, at, vars);
      for (const auto& v : vars) {
        Assignment step = at;
        step.set(v, at.at(v) + 1.0);
        double slope = evaluate(e.after, step) - fa;
        double dg = std::fabs(slope - gb[v]) / std::max(1.0, std::fabs(gb[v]));
        worst_g = std::max(worst_g, dg);
        c.require(dg <= 1e-9, "slope gap in " + v + " at " + e.component.location.describe());
      }
    }
  };
  for (const auto& f : fs::directory_iterator(src("corpus/problems"))) {
    Problem pb = load_problem_file(f.path().string());
    if (verify_convex(pb)) continue;
    for (int trial = 0; trial < 4; ++trial) {
      Assignment x0 = default_reference_point(pb);
      if (trial > 0)
        for (const auto& v : pb.scalar_variables()) {
          double lo = std::isfinite(v.lb) ? v.lb : -3.0, hi = std::isfinite(v.ub) ? v.ub : 3.0;
          x0.set(v.name, std::uniform_real_distribution<double>(lo + 0.05 * (hi - lo), hi - 0.05 * (hi - lo))(rng));
        }
      for (bool partial : {false, true}) {
        ConvexifyPolicy pol;
        pol.partial_linearization = partial;
        try {
          check_record(pb, convexify_problem(pb, x0, pol).record());
        } catch (const Error&) {
          // points where a surrogate cannot be built carry no SCA entry to check
        }
      }
    }
  }
  c.require(entries >= 20, "only " + std::to_string(entries) + " SCA entries");
  return std::to_string(entries) + " SCA entries, worst value gap " + fmt(worst_v, 3) + ", worst slope gap " +
         fmt(worst_g, 3);
}

// 5
std::string solver_oracle(Check& c) {
  double worst_v = 0, worst_x = 0;
  auto cases = oracle::analytic_cases();
  for (const auto& k : cases) {
    Problem pb = parse_problem(k.text);
    Solution s = solve(ConvexProblem(pb, {}, nullptr), default_reference_point(pb));
    c.require(s.x.has_value(), k.name + ": " + s.message);
    if (!s.x) continue;
    double dv = std::fabs(*s.objective - k.value);
    worst_v = std::max(worst_v, dv);
    c.require(dv <= 1e-5, k.name + ": value error " + fmt(dv));
    for (const auto& [n, v] : k.x) {
      double dx = std::fabs(s.x->at(n) - v);
      worst_x = std::max(worst_x, dx);
      c.require(dx <= 1e-4, k.name + ": x error " + fmt(dx));
    }
  }
  std::string bil;
  for (const char* name : {"bilinear", "bilinear_coupled"}) {
    Problem pb = corpus(name);
    auto vs = pb.scalar_variables();
    const int n = 400;
    double grid = INFINITY;
    for (int i = 0; i <= n; ++i)
      for (int j = 0; j <= n; ++j) {
        Assignment a;
        a.set(vs[0].name, vs[0].lb + (vs[0].ub - vs[0].lb) * i / n);
        a.set(vs[1].name, vs[1].lb + (vs[1].ub - vs[1].lb) * j / n);
        Assignment at = pb.bind(a);
        bool ok = true;
        for (const auto& r : pb.ineq) ok = ok && evaluate(r.expr, at) <= 1e-9;
        if (ok) grid = std::min(grid, evaluate(pb.objective, at));
      }
    ScaResult r = sca_solve(pb);
    double got = r.solution.objective.value_or(NAN);
    c.require(std::fabs(got - grid) <= 1e-3, std::string(name) + ": SCA " + fmt(got, 8) + " vs grid " + fmt(grid, 8));
    bil += "; " + std::string(name) + " " + fmt(got, 8) + " vs grid " + fmt(grid, 8);
  }
  return std::to_string(cases.size()) + " problems, worst value error " + fmt(worst_v, 3) + ", worst x error " +
         fmt(worst_x, 3) + bil;
}

// 6
std::string ecl_bound(Check& c) {
  Corpus cp = load_corpus(src("corpus/fault_injection.toml"));
  int runs = 0;
  for (const auto& e : cp.problems) {
    c.require(e.repair_depth.has_value(), e.name + " has no repair depth");
    for (int K = 0; K <= 4; ++K) {
      PipelineConfig cfg;
      cfg.max_ecl = K;
      PipelineResult r = run(e.problem, cfg);
      ++runs;
      c.require(r.execute_flag == (K >= *e.repair_depth),
                e.name + ": execute_flag " + std::to_string(r.execute_flag) + " at K = " + std::to_string(K));
      c.require(static_cast<int>(r.ecl_trace.size()) <= K, e.name + ": trace longer than K");
    }
  }
  return std::to_string(cp.problems.size()) + " problems x K = 0..4 (" + std::to_string(runs) +
         " runs), execute iff K >= depth";
}

// 7
std::string fdc_staging(Check& c) {
  Corpus cp = load_corpus(src("corpus/seeded_infeasible.toml"));
  int runs = 0;
  for (const auto& e : cp.problems) {
    double ub = e.problem.scalar_variables().front().ub;
    oracle::ScalarCutFamily fam = e.name == "seeded_ring" ? oracle::ring_cut(ub) : oracle::square_cut(ub);
    int depth = oracle::correction_depth(fam);
    c.require(e.correction_depth == depth, e.name + ": manifest depth disagrees with the recurrence");
    for (int L = 0; L <= 8; ++L) {
      PipelineConfig cfg;
      cfg.max_fdc = L;
      PipelineResult r = run(e.problem, cfg);
      ++runs;
      if (L >= depth) c.require(r.success_flag, e.name + ": infeasible at L = " + std::to_string(L));
      c.require(r.success_flag == oracle::corrected_within(fam, L),
                e.name + ": disagrees with the recurrence at L = " + std::to_string(L));
      c.require(static_cast<int>(r.fdc_trace.size()) <= L, e.name + ": trace longer than L");
      for (std::size_t i = 0; i < r.fdc_trace.size(); ++i) {
        const auto& t = r.fdc_trace[i];
        c.require(t.stage == 1 ? t.l <= L / 2 : t.l > L / 2, e.name + ": entry in the wrong stage");
        if (i + 1 < r.fdc_trace.size()) c.require(!t.feasible, e.name + ": loop continued past a feasible point");
      }
    }
  }
  Problem pb = corpus("case_study");
  Assignment x0;
  for (int i = 1; i <= 5; ++i) x0.set("p[" + std::to_string(i) + "]", 3.0);
  Assignment x1 = fdc_stage1(x0, check_feasibility(pb, x0, 1e-6), pb, 1, 0.2);
  for (const auto& [k, v] : x1) c.require(v == 2.0, "worked example gives " + fmt(v, 17) + " at " + k);
  return std::to_string(cp.problems.size()) + " problems x L = 0..8 (" + std::to_string(runs) +
         " runs) match the recurrence; [3,3,3,3,3] -> [2,2,2,2,2] exactly";
}

// 8
std::string metrics(Check& c) {
  Corpus two;
  two.problems.push_back({"A", "", {}, std::nullopt, std::nullopt, std::nullopt});
  two.problems.push_back({"B", "", {}, std::nullopt, std::nullopt, std::nullopt});
  auto runner = [](const CorpusEntry& e, const PipelineConfig& cfg) {
    int rep = static_cast<int>(cfg.solve.seed);
    PipelineResult r;
    r.execute_flag = e.name == "A" || rep < 9;
    r.success_flag = rep < (e.name == "A" ? 8 : 6);
    return r;
  };
  MetricsReport s = eval_corpus(two, {}, 10, 0, runner);
  c.require(s.sr == 0.7 && s.er == 0.95, "synthetic SR " + fmt(s.sr, 17) + " ER " + fmt(s.er, 17));

  int reports = 1;
  std::vector<MetricsReport> all{s};
  for (const char* m : {"builtin", "fault_injection", "seeded_infeasible"}) {
    Corpus cp = load_corpus(src(std::string("corpus/") + m + ".toml"));
    MetricsReport a = eval_corpus(cp, {}, 3, 11), b = eval_corpus(cp, {}, 3, 11);
    reports += 2;
    all.push_back(a);
    all.push_back(b);
    c.require(a.sr == b.sr && a.er == b.er, std::string(m) + ": rates differ between runs");
    for (std::size_t i = 0; i < a.problems.size(); ++i)
      c.require(a.problems[i].success == b.problems[i].success && a.problems[i].executed == b.problems[i].executed,
                std::string(m) + ": outcome arrays differ");
  }
  for (const auto& r : all) c.require(r.sr <= r.er, "SR above ER");

  PipelineConfig cfg;
  cfg.gateway = std::make_shared<ConfiguredGateway>(GatewayConfig::load(src("tests/fixtures/replay.toml")));
  NlDescription desc(slurp(src("corpus/descriptions/case_study.txt")));
  c.require(without_timings(run(desc, cfg)) == without_timings(run(desc, cfg)), "replayed runs differ");
  return "SR 0.7, ER 0.95 on the synthetic fixture; " + std::to_string(reports) +
         " reports with SR <= ER; repeated corpus and replay runs identical";
}

// 9
std::string ablation(Check& c) {
  Corpus cp = load_corpus(src("corpus/builtin.toml"));
  MetricsReport base = eval_corpus(cp, {}, 1, 0);
  PipelineConfig nc, nf;
  nc.disable_convexify = true;
  nf.disable_fdc = true;
  MetricsReport rc = eval_corpus(cp, nc, 1, 0), rf = eval_corpus(cp, nf, 1, 0);
  c.require(rc.er < base.er, "disabling convexification did not lower ER");
  c.require(rf.sr < base.sr, "disabling FDC did not lower SR");
  return "baseline SR " + fmt(base.sr, 4) + " ER " + fmt(base.er, 4) + "; no convexify ER " + fmt(rc.er, 4) +
         "; no FDC SR " + fmt(rf.sr, 4);
}

// 10
std::string round_trip(Check& c) {
  std::vector<std::string> texts;
  int files = 0;
  for (const auto& f : fs::directory_iterator(src("corpus/problems"))) {
    Problem pb = load_problem_file(f.path().string());
    ++files;
    c.require(parse_problem(emit_dsl(pb)) == pb, f.path().filename().string() + ": DSL round trip");
    c.require(parse_json(emit_json(pb)) == pb, f.path().filename().string() + ": JSON round trip");
    c.require(emit_dsl(parse_problem(emit_dsl(pb))) == emit_dsl(pb), f.path().filename().string() + ": DSL text");
    texts.push_back(slurp(f.path().string()));
    texts.push_back(emit_json(pb));
  }

  std::mt19937_64 rng(12345);
  std::uniform_int_distribution<int> byte(0, 255);
  int rejected = 0, accepted = 0;
  const int kRandom = 100000, kMutated = 50000, kInputs = kRandom + kMutated;
  for (int i = 0; i < kInputs; ++i) {
    std::string s;
    if (i < kRandom) {
      s.resize(std::uniform_int_distribution<int>(0, 200)(rng));
      for (auto& ch : s) ch = static_cast<char>(byte(rng));
    } else {
      s = texts[static_cast<std::size_t>(i) % texts.size()];
      int edits = std::uniform_int_distribution<int>(1, 8)(rng);
      for (int k = 0; k < edits && !s.empty(); ++k) {
        auto pos = std::uniform_int_distribution<std::size_t>(0, s.size() - 1)(rng);
        switch (byte(rng) % 3) {
          case 0: s[pos] = static_cast<char>(byte(rng)); break;
          case 1: s.erase(pos, 1 + byte(rng) % 4); break;
          default: s.insert(pos, 1, "()[]{},:;=+-*/^<>\"0123456789e.\n "[byte(rng) % 33]);
        }
      }
    }
    try {
      Problem pb = parse_any(s);
      ++accepted;
      if (parse_problem(emit_dsl(pb)) != pb) c.require(false, "accepted input does not round trip");
    } catch (const Error&) {
      ++rejected;
    } catch (const std::exception& e) {
      c.require(false, std::string("non-library exception: ") + e.what());
    }
  }
  return std::to_string(files) + " corpus files round-trip; " + std::to_string(kRandom) + " random and " + std::to_string(kMutated) +
         " mutated inputs (" +
         std::to_string(rejected) + " rejected, " + std::to_string(accepted) + " accepted), no crash";
}

}  // namespace

int main() {
  auto t0 = std::chrono::steady_clock::now();
  criterion(1, "case-study golden", case_study);
  criterion(2, "gradient oracle", gradient_oracle);
  criterion(3, "curvature soundness", curvature_soundness);
  criterion(4, "SCA tangency", sca_tangency);
  criterion(5, "solver oracle suite", solver_oracle);
  criterion(6, "ECL bound and efficacy", ecl_bound);
  criterion(7, "FDC staging and efficacy", fdc_staging);
  criterion(8, "metrics arithmetic and determinism", metrics);
  criterion(9, "ablation direction", ablation);
  criterion(10, "round-trip and fuzz", round_trip);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << " in " << fmt(secs, 3) << " s"
            << std::endl;
  return failures == 0 ? 0 : 1;
}
