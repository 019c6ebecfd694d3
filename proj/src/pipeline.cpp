#include <chrono>

#include "ncx/pipeline.hpp"

namespace ncx {

double PipelineConfig::alpha_at(int l) const {
  if (l >= 1 && static_cast<std::size_t>(l) <= alpha.size()) return alpha[static_cast<std::size_t>(l) - 1];
  return 1.0 / (l + 1);
}

void PipelineConfig::validate() const {
  if (max_ecl < 0 || max_fdc < 0) throw Error("iteration limits K and L must be nonnegative");
  if (!(feasibility_tol > 0)) throw Error("feasibility tolerance must be positive");
  for (double a : alpha)
    if (!(a > 0 && a <= 1)) throw Error("FDC step sizes must lie in (0, 1]");
  if (extraction_rounds < 1) throw Error("extraction needs at least one round");
  solve.validate();
}

namespace {

class Stopwatch {
 public:
  explicit Stopwatch(double& sink) : sink_(sink), start_(std::chrono::steady_clock::now()) {}
  ~Stopwatch() { sink_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }
  Stopwatch(const Stopwatch&) = delete;
  Stopwatch& operator=(const Stopwatch&) = delete;

 private:
  double& sink_;
  std::chrono::steady_clock::time_point start_;
};

Assignment restrict_to(const Problem& pb, const Assignment& x) {
  Assignment out;
  for (const auto& v : pb.scalar_variables()) out.set(v.name, x.at(v.name));
  return out;
}

/// A linearized objective is only meaningful inside the SCA loop.
bool objective_linearized(const ConvexProblem& cp) {
  for (const auto& e : cp.record().entries)
    if (e.strategy == Strategy::SCA && e.component.location.kind == Location::Kind::Objective) return true;
  return false;
}

struct Attempt {
  std::optional<ConvexProblem> convex;
  std::optional<Solution> solution;
  std::optional<ErrorReport> error;
};

class Runner {
 public:
  Runner(const PipelineConfig& cfg, PipelineResult& res) : cfg_(cfg), res_(res) {}

  void execute(const Problem& pb) {
    st_.problem = pb;
    st_.x0 = default_reference_point(pb);
    for (const auto& [k, v] : cfg_.x0)
      if (st_.x0.contains(k)) st_.x0.set(k, v);
    st_.solve = cfg_.solve;
    st_.policy = cfg_.policy;
    st_.convexify_disabled = cfg_.disable_convexify;

    Attempt a = attempt(0, st_.x0);
    const int K = cfg_.disable_ecl ? 0 : cfg_.max_ecl;
    for (int k = 1; a.error && k <= K; ++k) {
      RepairAction act;
      bool applied;
      {
        Stopwatch w(res_.timings.ecl);
        act = ecl_repair(*a.error, st_, cfg_.gateway.get());
        applied = apply_repair(act, st_);
      }
      res_.ecl_trace.push_back({*a.error, act});
      if (!applied) break;
      a = attempt(k, st_.x0);
    }
    if (a.error) {
      res_.diagnostics.push_back("execution failed: " + a.error->describe());
      return;
    }

    res_.execute_flag = true;
    keep(a);
    Assignment x = restrict_to(st_.problem, *a.solution->x);
    FeasibilityReport rep = feasibility(x);

    if (!rep.feasible && !cfg_.disable_fdc) {
      Stopwatch w(res_.timings.fdc);
      correct(x, rep);
    }

    res_.x = x;
    res_.feasibility = rep;
    res_.success_flag = rep.feasible;
    try {
      res_.objective = evaluate(st_.problem.objective, st_.problem.bind(x));
    } catch (const Error& e) {
      res_.diagnostics.push_back(std::string("objective not evaluable at the final point: ") + e.what());
    }
  }

 private:
  FeasibilityReport feasibility(const Assignment& x) {
    Stopwatch w(res_.timings.feasibility);
    return check_feasibility(st_.problem, x, cfg_.feasibility_tol);
  }

  void keep(const Attempt& a) {
    if (a.convex) {
      res_.convex = a.convex;
      res_.backend = select_backend(*a.convex);
    }
  }

  Attempt attempt(int k, const Assignment& x0) {
    Attempt out;
    std::string stage = "convexify";
    auto fail = [&](ErrorClass c, std::string msg, std::map<std::string, std::string> payload = {}) {
      out.error = ErrorReport{c, stage, k, std::move(msg), std::move(payload)};
    };
    try {
      if (cfg_.disable_convexify) {
        Stopwatch w(res_.timings.convexify);
        if (!verify_convex(st_.problem)) {
          fail(ErrorClass::ConvexificationFailed, "convexification is disabled and the problem is not certified convex");
          return out;
        }
        out.convex.emplace(st_.problem, TransformRecord{}, nullptr);
      } else if (!st_.use_sca) {
        Stopwatch w(res_.timings.convexify);
        out.convex = convexify_problem(st_.problem, x0, st_.policy);
      }

      stage = "solve";
      Solution sol;
      const bool iterate = st_.use_sca || objective_linearized(*out.convex);
      {
        Stopwatch w(res_.timings.solve);
        if (iterate)
          sol = sca_solve(st_.problem, st_.solve, x0, st_.policy).solution;
        else
          sol = solve(*out.convex, x0, st_.solve);
      }
      if (iterate && sol.x) {
        Stopwatch w(res_.timings.convexify);
        try {
          out.convex = convexify_problem(st_.problem, restrict_to(st_.problem, *sol.x), st_.policy);
        } catch (const Error&) {
        }
      }
      if (sol.status == SolveStatus::Infeasible) {
        fail(ErrorClass::SolverInfeasible, sol.message);
      } else if (!sol.x) {
        fail(ErrorClass::SolverNumericalFailure, sol.message);
      }
      out.solution = std::move(sol);
    } catch (const UnboundSymbol& e) {
      fail(ErrorClass::UnboundSymbol, e.what(), {{"symbol", e.name()}});
    } catch (const GatewayError& e) {
      fail(ErrorClass::GatewayError, e.what());
    } catch (const Error& e) {
      fail(stage == "convexify" ? ErrorClass::ConvexificationFailed : ErrorClass::SolverNumericalFailure, e.what());
    }
    return out;
  }

  /// Two-stage correction; leaves the first feasible point, or the last one.
  void correct(Assignment& x, FeasibilityReport& rep) {
    const int L = cfg_.max_fdc;
    const int half = L / 2;
    for (int l = 1; l <= L && !rep.feasible; ++l) {
      FdcEntry e;
      e.l = l;
      e.stage = l <= half ? 1 : 2;
      try {
        std::optional<ConvexProblem> cp;
        Solution sol;
        if (e.stage == 1) {
          e.alpha = cfg_.alpha_at(l);
          e.x0 = fdc_stage1(x, rep, st_.problem, l, e.alpha);
          {
            Stopwatch w(res_.timings.convexify);
            cp = st_.use_sca ? std::nullopt : std::optional(convexify_problem(st_.problem, e.x0, st_.policy));
          }
          Stopwatch w(res_.timings.solve);
          sol = cp && !objective_linearized(*cp) ? solve(*cp, e.x0, st_.solve)
                                                 : sca_solve(st_.problem, st_.solve, e.x0, st_.policy).solution;
        } else {
          e.x0 = x;
          std::optional<Stage2Plan> plan;
          {
            Stopwatch w(res_.timings.convexify);
            plan.emplace(fdc_stage2(st_.problem, x, l, L, st_.policy));
          }
          e.rung = plan->rung;
          for (const auto& t : plan->problem.record().entries)
            e.transforms.push_back(std::string(to_string(t.strategy)) + " at " + t.component.location.describe());
          cp = plan->problem;
          Stopwatch w(res_.timings.solve);
          sol = plan->rung == LadderRung::ScaHandoff || objective_linearized(*cp) ? sca_solve(st_.problem, st_.solve, x, st_.policy).solution
                                                     : solve(*cp, x, st_.solve);
        }
        if (sol.x) {
          x = restrict_to(st_.problem, *sol.x);
          rep = feasibility(x);
          if (cp) {
            res_.convex = cp;
            res_.backend = select_backend(*cp);
          }
        } else {
          e.error = std::string(to_string(sol.status)) + ": " + sol.message;
        }
      } catch (const Error& ex) {
        e.error = ex.what();
      }
      e.feasible = rep.feasible;
      e.max_violation = rep.max_violation();
      res_.fdc_trace.push_back(std::move(e));
    }
  }

  const PipelineConfig& cfg_;
  PipelineResult& res_;
  EclState st_;
};

}  // namespace

PipelineResult run(const PipelineInput& input, const PipelineConfig& cfg) {
  cfg.validate();
  PipelineResult res;
  Problem pb;
  {
    Stopwatch w(res.timings.formulate);
    if (const auto* p = std::get_if<Problem>(&input)) {
      pb = *p;
      res.consistency = validate_consistency(pb);
    } else {
      const auto& desc = std::get<NlDescription>(input);
      if (!cfg.gateway) {
        res.diagnostics.push_back("a description input needs a model gateway");
        return res;
      }
      try {
        auto ex = extract_from_nl(desc, *cfg.gateway, cfg.extraction_rounds);
        pb = std::move(ex.problem);
        res.consistency = std::move(ex.report);
        for (auto& d : ex.diagnostics) res.diagnostics.push_back(std::move(d));
      } catch (const ExtractionFailed& e) {
        res.consistency = e.last_report();
        res.diagnostics.push_back(e.what());
        return res;
      } catch (const Error& e) {
        res.diagnostics.push_back(std::string("formulation failed: ") + e.what());
        return res;
      }
    }
  }
  res.problem = pb;
  Runner(cfg, res).execute(pb);
  return res;
}

}  // namespace ncx
