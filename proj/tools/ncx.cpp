// Command-line front end: solve, analyze, transform, eval, extract.
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "ncx/eval.hpp"
#include "ncx/pipeline.hpp"

using namespace ncx;

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kInputError = 2;

/// "x=1,p[2]=0.5"
Assignment parse_point(const std::string& text, const Problem& pb) {
  Assignment a;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto eq = item.find('=');
    if (eq == std::string::npos) throw Error("expected name=value in --x0, got '" + item + "'");
    std::string name = item.substr(0, eq);
    double v;
    try {
      v = std::stod(item.substr(eq + 1));
    } catch (const std::exception&) {
      throw Error("not a number in --x0: '" + item + "'");
    }
    bool found = false;
    for (const auto& sv : pb.scalar_variables())
      if (sv.name == name) {
        if (v < sv.lb || v > sv.ub) throw BoundViolation(name + " = " + item.substr(eq + 1) + " lies outside its bounds");
        found = true;
      }
    if (!found) throw UnboundSymbol(name);
    a.set(name, v);
  }
  return a;
}

Assignment start_point(const Problem& pb, const std::string& text) {
  Assignment x0 = default_reference_point(pb);
  if (!text.empty()) x0.merge(parse_point(text, pb));
  return x0;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
  if (out.empty()) throw Error("empty list");
  return out;
}

void print_point(const Assignment& x) {
  for (const auto& [k, v] : x) std::cout << "  " << k << " = " << format_number(v) << '\n';
}

int cmd_analyze(const std::string& file) {
  Problem pb = load_problem_file(file);
  std::cout << "objective: " << (pb.direction == Direction::Maximize ? "maximize" : "minimize") << ", "
            << to_string(curvature_of(pb.objective)) << '\n';
  for (std::size_t i = 0; i < pb.ineq.size(); ++i)
    std::cout << "ineq " << i + 1 << " [" << pb.ineq[i].group << "]: " << to_string(curvature_of(pb.ineq[i].expr))
              << '\n';
  for (std::size_t j = 0; j < pb.eq.size(); ++j)
    std::cout << "eq " << j + 1 << " [" << pb.eq[j].group << "]: " << to_string(curvature_of(pb.eq[j].expr)) << '\n';
  auto comps = detect_nonconvex(pb);
  std::cout << (comps.empty() ? "convex: yes\n" : "convex: no\n");
  for (const auto& c : comps)
    std::cout << "  " << to_string(c.kind) << " at " << c.location.describe() << ": " << to_string(c.term) << '\n';
  return kOk;
}

int cmd_transform(const std::string& file, const std::string& x0_text, const std::string& backend) {
  Problem pb = load_problem_file(file);
  ConvexProblem cp = convexify_problem(pb, start_point(pb, x0_text));
  if (!backend.empty()) {
    std::cout << emit_script(cp, BackendId::script(backend));
    return kOk;
  }
  for (const auto& e : cp.record().entries)
    std::cerr << to_string(e.strategy) << " at " << e.component.location.describe() << '\n';
  std::cout << emit_dsl(cp.problem());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ncx: non-convex to convex optimization pipeline"};
  app.require_subcommand(1);

  std::string file, x0_text, report_path, backend, gateway_path, csv_path, json_path, ablate, sweep_k, sweep_l;
  int max_ecl = 3, max_fdc = 6, repeats = 10, rounds = 3;
  std::uint64_t seed = 0;

  auto* solve_cmd = app.add_subcommand("solve", "run the full pipeline on a problem file");
  solve_cmd->add_option("file", file, "problem file (modeling language or JSON)")->required();
  solve_cmd->add_option("--x0", x0_text, "initial point, name=value,...");
  solve_cmd->add_option("--report", report_path, "write the JSON report here");
  solve_cmd->add_option("--max-ecl", max_ecl, "error-correction iterations K");
  solve_cmd->add_option("--max-fdc", max_fdc, "feasibility-correction iterations L");
  solve_cmd->add_option("--gateway", gateway_path, "gateway configuration (TOML)");

  auto* analyze_cmd = app.add_subcommand("analyze", "curvature and non-convex components");
  analyze_cmd->add_option("file", file, "problem file")->required();

  auto* transform_cmd = app.add_subcommand("transform", "print the convexified problem");
  transform_cmd->add_option("file", file, "problem file")->required();
  transform_cmd->add_option("--x0", x0_text, "reference point, name=value,...");
  transform_cmd->add_option("--emit-script", backend, "cvxpy, scipy or gurobi");

  auto* eval_cmd = app.add_subcommand("eval", "success and execution rates over a corpus");
  eval_cmd->add_option("corpus", file, "corpus manifest (TOML)")->required();
  eval_cmd->add_option("--repeats", repeats, "repetitions per problem")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--seed", seed, "base seed");
  eval_cmd->add_option("--max-ecl", max_ecl, "error-correction iterations K");
  eval_cmd->add_option("--max-fdc", max_fdc, "feasibility-correction iterations L");
  eval_cmd->add_option("--ablate", ablate, "disable one stage")->check(CLI::IsMember({"convex", "ecl", "fdc"}));
  eval_cmd->add_option("--sweep-k", sweep_k, "comma-separated K values");
  eval_cmd->add_option("--sweep-l", sweep_l, "comma-separated L values");
  eval_cmd->add_option("--csv", csv_path, "write flat metrics here");
  eval_cmd->add_option("--json", json_path, "write the JSON metrics here");
  eval_cmd->add_option("--gateway", gateway_path, "gateway configuration (TOML)");

  auto* extract_cmd = app.add_subcommand("extract", "formulate a problem from a text description");
  extract_cmd->add_option("file", file, "description text file")->required();
  extract_cmd->add_option("--gateway", gateway_path, "gateway configuration (TOML)")->required();
  extract_cmd->add_option("--rounds", rounds, "formulation attempts")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kInputError;
  }

  PipelineConfig cfg;
  cfg.max_ecl = max_ecl;
  cfg.max_fdc = max_fdc;
  cfg.solve.seed = seed;

  // Input problems surface as exit 2; run-time failures are inside the result.
  try {
    if (!gateway_path.empty()) cfg.gateway = std::make_shared<ConfiguredGateway>(GatewayConfig::load(gateway_path));

    if (*analyze_cmd) return cmd_analyze(file);
    if (*transform_cmd) return cmd_transform(file, x0_text, backend);

    if (*solve_cmd) {
      Problem pb = load_problem_file(file);
      if (!x0_text.empty()) cfg.x0 = parse_point(x0_text, pb);
      cfg.validate();
      PipelineResult r = run(pb, cfg);
      if (!report_path.empty()) write_file(report_path, report_json(r));
      std::cout << "success_flag " << r.success_flag << "\nexecute_flag " << r.execute_flag << '\n';
      if (r.objective) std::cout << "objective " << format_number(*r.objective) << '\n';
      if (r.x) print_point(*r.x);
      for (const auto& d : r.diagnostics) std::cerr << d << '\n';
      return r.success_flag ? kOk : kFailed;
    }

    if (*extract_cmd) {
      auto ex = extract_from_nl(NlDescription(read_file(file)), *cfg.gateway, rounds);
      for (const auto& d : ex.diagnostics) std::cerr << d << '\n';
      std::cout << emit_dsl(ex.problem);
      return kOk;
    }

    if (*eval_cmd) {
      cfg.disable_convexify = ablate == "convex";
      cfg.disable_ecl = ablate == "ecl";
      cfg.disable_fdc = ablate == "fdc";
      cfg.validate();
      Corpus corpus = load_corpus(file);
      if (!sweep_k.empty() || !sweep_l.empty()) {
        auto ks = sweep_k.empty() ? std::vector<int>{max_ecl} : parse_int_list(sweep_k);
        auto ls = sweep_l.empty() ? std::vector<int>{max_fdc} : parse_int_list(sweep_l);
        auto cells = sweep_iterations(corpus, cfg, ks, ls, repeats, seed);
        std::cout << sweep_csv(cells);
        if (!csv_path.empty()) write_file(csv_path, sweep_csv(cells));
        return kOk;
      }
      MetricsReport r = eval_corpus(corpus, cfg, repeats, seed);
      std::cout << metrics_csv(r) << '\n' << time_breakdown(r).table();
      if (!csv_path.empty()) write_file(csv_path, metrics_csv(r));
      if (!json_path.empty()) write_file(json_path, metrics_json(r));
      return kOk;
    }
  } catch (const ExtractionFailed& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailed;
  } catch (const GatewayError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailed;
  } catch (const ConvexificationFailed& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  }
  return kInputError;
}
