#include <cstdio>
#include <future>
#include <sstream>

#include <json.hpp>

#include "ncx/eval.hpp"

namespace ncx {

namespace {

using json = nlohmann::ordered_json;

double mean(const std::vector<int>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (int x : v) s += x;
  return s / static_cast<double>(v.size());
}

void accumulate(StageTimings& into, const StageTimings& t, double w) {
  into.formulate += w * t.formulate;
  into.convexify += w * t.convexify;
  into.solve += w * t.solve;
  into.feasibility += w * t.feasibility;
  into.ecl += w * t.ecl;
  into.fdc += w * t.fdc;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

void aggregate(MetricsReport& r) {
  r.sr = r.er = 0.0;
  if (r.problems.empty()) return;
  for (const auto& p : r.problems) {
    r.sr += mean(p.success);
    r.er += mean(p.executed);
  }
  r.sr /= static_cast<double>(r.problems.size());
  r.er /= static_cast<double>(r.problems.size());
}

PipelineResult run_entry(const CorpusEntry& e, const PipelineConfig& cfg) {
  if (e.description && cfg.gateway) return run(*e.description, cfg);
  return run(e.problem, cfg);
}

MetricsReport eval_corpus(const Corpus& c, const PipelineConfig& cfg, int repetitions, std::uint64_t seed,
                          const Runner& runner) {
  if (repetitions < 1) throw Error("at least one repetition is needed");
  cfg.validate();
  MetricsReport r;
  r.max_ecl = cfg.max_ecl;
  r.max_fdc = cfg.max_fdc;
  r.disable_convexify = cfg.disable_convexify;
  r.disable_ecl = cfg.disable_ecl;
  r.disable_fdc = cfg.disable_fdc;
  r.seed = seed;
  r.repetitions = repetitions;

  struct Partial {
    ProblemOutcome outcome;
    StageTimings timings;
  };
  std::vector<std::future<Partial>> jobs;
  for (const auto& entry : c.problems) {
    jobs.push_back(std::async(std::launch::async, [&, repetitions, seed] {
      Partial p;
      p.outcome.name = entry.name;
      for (int rep = 0; rep < repetitions; ++rep) {
        PipelineConfig run_cfg = cfg;
        run_cfg.solve.seed = seed + static_cast<std::uint64_t>(rep);
        PipelineResult res = runner(entry, run_cfg);
        p.outcome.success.push_back(res.success_flag ? 1 : 0);
        p.outcome.executed.push_back(res.execute_flag ? 1 : 0);
        accumulate(p.timings, res.timings, 1.0);
      }
      return p;
    }));
  }
  const double runs = static_cast<double>(c.problems.size()) * repetitions;
  for (auto& j : jobs) {
    Partial p = j.get();
    r.problems.push_back(std::move(p.outcome));
    accumulate(r.timings, p.timings, 1.0 / runs);
  }
  aggregate(r);
  return r;
}

TimeBreakdown time_breakdown(const StageTimings& t) {
  TimeBreakdown b;
  b.stages = {{"formulate", t.formulate}, {"convexify", t.convexify}, {"solve", t.solve},
              {"feasibility", t.feasibility}, {"ecl", t.ecl}, {"fdc", t.fdc}};
  double total = 0.0;
  for (const auto& s : b.stages) total += s.seconds;
  if (!(total > 0)) {
    for (auto& s : b.stages) s.share = 1.0 / static_cast<double>(b.stages.size());
    b.warning = "all stage timings are zero; shares are uniform";
    return b;
  }
  for (auto& s : b.stages) s.share = s.seconds / total;
  return b;
}

TimeBreakdown time_breakdown(const MetricsReport& r) { return time_breakdown(r.timings); }

std::string TimeBreakdown::table() const {
  std::ostringstream os;
  os << "stage        seconds       share\n";
  for (const auto& s : stages) {
    std::string name = s.stage;
    name.resize(12, ' ');
    os << name << ' ' << fixed(s.seconds, 6) << "  " << fixed(100.0 * s.share, 1) << "%\n";
  }
  if (warning) os << "warning: " << *warning << '\n';
  return os.str();
}

std::string TimeBreakdown::json() const {
  ncx::json j;
  ncx::json arr = ncx::json::array();
  for (const auto& s : stages) arr.push_back({{"stage", s.stage}, {"seconds", s.seconds}, {"share", s.share}});
  j["stages"] = std::move(arr);
  j["warning"] = warning ? ncx::json(*warning) : ncx::json(nullptr);
  return j.dump(2);
}

std::vector<SweepCell> sweep_iterations(const Corpus& c, const PipelineConfig& cfg, const std::vector<int>& ks,
                                        const std::vector<int>& ls, int repetitions, std::uint64_t seed,
                                        const Runner& runner) {
  if (ks.empty() || ls.empty()) throw Error("sweep lists must be nonempty");
  std::vector<SweepCell> cells;
  for (int k : ks)
    for (int l : ls) {
      PipelineConfig cell = cfg;
      cell.max_ecl = k;
      cell.max_fdc = l;
      cells.push_back({k, l, eval_corpus(c, cell, repetitions, seed, runner)});
    }
  return cells;
}

std::string metrics_json(const MetricsReport& r) {
  json j;
  j["sr"] = r.sr;
  j["er"] = r.er;
  json probs = json::array();
  for (const auto& p : r.problems)
    probs.push_back({{"name", p.name}, {"success", p.success}, {"executed", p.executed}});
  j["problems"] = std::move(probs);
  j["timings"] = json::parse(time_breakdown(r).json());
  j["config"] = {{"max_ecl", r.max_ecl},
                 {"max_fdc", r.max_fdc},
                 {"disable_convexify", r.disable_convexify},
                 {"disable_ecl", r.disable_ecl},
                 {"disable_fdc", r.disable_fdc},
                 {"seed", r.seed},
                 {"repetitions", r.repetitions}};
  return j.dump(2);
}

std::string metrics_csv(const MetricsReport& r) {
  std::ostringstream os;
  os << "problem,success_rate,execution_rate\n";
  for (const auto& p : r.problems) os << p.name << ',' << mean(p.success) << ',' << mean(p.executed) << '\n';
  os << "ALL," << r.sr << ',' << r.er << '\n';
  return os.str();
}

std::string sweep_csv(const std::vector<SweepCell>& cells) {
  std::ostringstream os;
  os << "K,L,SR,ER\n";
  for (const auto& c : cells) os << c.max_ecl << ',' << c.max_fdc << ',' << c.report.sr << ',' << c.report.er << '\n';
  return os.str();
}

}  // namespace ncx
