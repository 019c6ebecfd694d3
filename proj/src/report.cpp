#include <cmath>

#include <json.hpp>

#include "ncx/pipeline.hpp"

namespace ncx {

namespace {

using json = nlohmann::ordered_json;

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json point(const Assignment& x) {
  json j = json::object();
  for (const auto& [k, v] : x) j[k] = v;
  return j;
}

json transforms(const TransformRecord& rec) {
  json arr = json::array();
  for (const auto& e : rec.entries) {
    json t;
    t["strategy"] = std::string(to_string(e.strategy));
    t["location"] = e.component.location.describe();
    t["before"] = to_string(e.before);
    t["after"] = to_string(e.after);
    if (e.reference) t["reference"] = point(*e.reference);
    arr.push_back(std::move(t));
  }
  return arr;
}

}  // namespace

std::string report_json(const PipelineResult& r) {
  json j;
  j["flags"] = {{"success", r.success_flag ? 1 : 0}, {"execute", r.execute_flag ? 1 : 0}};
  j["objective"] = r.objective ? number(*r.objective) : json(nullptr);
  j["x"] = r.x ? point(*r.x) : json(nullptr);
  j["timings"] = {{"formulate", r.timings.formulate}, {"convexify", r.timings.convexify},
                  {"solve", r.timings.solve},         {"feasibility", r.timings.feasibility},
                  {"ecl", r.timings.ecl},             {"fdc", r.timings.fdc}};

  json ecl = json::array();
  for (const auto& e : r.ecl_trace) {
    json payload = json::object();
    for (const auto& [k, v] : e.error.payload) payload[k] = v;
    ecl.push_back({{"iteration", e.error.iteration},
                   {"error", std::string(to_string(e.error.error_class))},
                   {"stage", e.error.stage},
                   {"message", e.error.message},
                   {"payload", payload},
                   {"repair", e.repair.describe()},
                   {"source", e.repair.source},
                   {"note", e.repair.note}});
  }
  j["ecl_trace"] = std::move(ecl);

  json fdc = json::array();
  for (const auto& e : r.fdc_trace) {
    json t;
    t["stage"] = e.stage;
    t["l"] = e.l;
    if (e.stage == 1) t["alpha"] = e.alpha;
    t["x0"] = point(e.x0);
    if (e.rung) t["rung"] = std::string(to_string(*e.rung));
    if (!e.transforms.empty()) t["transforms"] = e.transforms;
    t["feasible"] = e.feasible;
    t["max_violation"] = number(e.max_violation);
    if (!e.error.empty()) t["error"] = e.error;
    fdc.push_back(std::move(t));
  }
  j["fdc_trace"] = std::move(fdc);
  j["transforms"] = r.convex ? transforms(r.convex->record()) : json::array();

  if (r.feasibility) {
    const auto& f = *r.feasibility;
    json ineq = json::array(), eq = json::array(), vars = json::object();
    for (double v : f.ineq) ineq.push_back(number(v));
    for (double v : f.eq) eq.push_back(number(v));
    for (const auto& [k, v] : f.variables) vars[k] = number(v);
    j["feasibility"] = {{"feasible", f.feasible}, {"tolerance", f.tolerance}, {"ineq", ineq},
                        {"eq", eq},               {"variables", vars},         {"diagnostics", f.diagnostics}};
  }
  if (r.consistency) {
    const auto& c = *r.consistency;
    j["consistency"] = {{"alignment", c.alignment},
                        {"alignment_skipped", c.alignment_skipped},
                        {"completeness", c.completeness},
                        {"type_correctness", c.type_correctness},
                        {"value_accuracy", c.value_accuracy},
                        {"diagnostics", c.diagnostics}};
  }
  j["backend"] = r.backend ? json(r.backend->to_string()) : json(nullptr);
  j["diagnostics"] = r.diagnostics;
  return j.dump(2);
}

}  // namespace ncx
