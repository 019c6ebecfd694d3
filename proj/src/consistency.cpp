#include <cmath>
#include <set>

#include "ncx/gateway.hpp"
#include "ncx/model_io.hpp"

namespace ncx {

namespace {

/// True when a discrete variable sits under log/exp/sqrt or in a denominator.
bool discrete_in_smooth_atom(const Expr& e, const std::set<std::string>& discrete, bool guarded,
                             std::string& where) {
  switch (e.kind()) {
    case NodeKind::Var:
      if (guarded && discrete.count(e.name())) {
        where = e.name();
        return true;
      }
      return false;
    case NodeKind::Log:
    case NodeKind::Log2:
    case NodeKind::Exp:
    case NodeKind::Sqrt:
      return discrete_in_smooth_atom(e.child(0), discrete, true, where);
    case NodeKind::Div:
      return discrete_in_smooth_atom(e.child(0), discrete, guarded, where) ||
             discrete_in_smooth_atom(e.child(1), discrete, true, where);
    default:
      for (const auto& c : e.children())
        if (discrete_in_smooth_atom(c, discrete, guarded, where)) return true;
      return false;
  }
}

template <class F>
void for_each_expr(const Problem& pb, F&& f) {
  f(pb.objective, std::string("objective"));
  for (std::size_t i = 0; i < pb.ineq.size(); ++i) f(pb.ineq[i].expr, "inequality " + std::to_string(i + 1));
  for (std::size_t j = 0; j < pb.eq.size(); ++j) f(pb.eq[j].expr, "equality " + std::to_string(j + 1));
}

}  // namespace

NlDescription::NlDescription(std::string t) : text(std::move(t)) {
  if (text.find_first_not_of(" \t\r\n") == std::string::npos)
    throw Error("problem description must be nonempty");
}

ConsistencyReport validate_consistency(const Problem& pb, const NlDescription* desc, ModelGateway* gateway) {
  ConsistencyReport r;

  std::set<std::string> declared, discrete, used_vars, used_params;
  for (const auto& v : pb.scalar_variables()) {
    declared.insert(v.name);
    if (v.kind != VarKind::Continuous) discrete.insert(v.name);
  }
  for_each_expr(pb, [&](const Expr& e, const std::string&) {
    auto fv = free_vars(e);
    used_vars.insert(fv.begin(), fv.end());
    auto fp = free_params(e);
    used_params.insert(fp.begin(), fp.end());
  });

  // Completeness.
  for (const auto& v : declared)
    if (!used_vars.count(v)) {
      r.completeness = false;
      r.diagnostics.push_back("completeness: variable " + v + " is declared but never used");
    }
  for (const auto& v : used_vars)
    if (!declared.count(v)) {
      r.completeness = false;
      r.diagnostics.push_back("completeness: variable " + v + " is not declared");
    }

  // Type correctness.
  for_each_expr(pb, [&](const Expr& e, const std::string& where) {
    std::string name;
    if (discrete_in_smooth_atom(e, discrete, false, name)) {
      r.type_correctness = false;
      r.diagnostics.push_back("type: discrete variable " + name + " inside a smooth atom or denominator in " + where);
    }
  });
  for (const auto& v : pb.variables)
    try {
      v.validate();
    } catch (const BoundViolation& e) {
      r.type_correctness = false;
      r.diagnostics.push_back(std::string("type: ") + e.what());
    }

  // Value accuracy.
  for (const auto& p : used_params) {
    auto v = pb.param_value(p);
    if (!v || !std::isfinite(*v)) {
      r.value_accuracy = false;
      r.diagnostics.push_back("value: parameter " + p + " has no value");
    }
  }

  // Alignment.
  if (desc && gateway) {
    r.alignment_skipped = false;
    std::string input = desc->text + "\n\nFormulation:\n```\n" + emit_dsl(pb) + "```";
    try {
      r.alignment = gateway->complete(builtin_template(TemplateId::ConsistencyQuery), input) == "1";
      if (!r.alignment) r.diagnostics.push_back("alignment: formulation does not match the description");
    } catch (const GatewayError& e) {
      r.alignment = false;
      r.diagnostics.push_back(std::string("alignment: ") + e.what());
    }
  } else {
    r.alignment = true;
    r.alignment_skipped = true;
    r.diagnostics.push_back("alignment: skipped (no description or gateway)");
  }
  return r;
}

}  // namespace ncx
