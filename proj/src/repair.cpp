#include <cmath>

#include <json.hpp>

#include "ncx/pipeline.hpp"

namespace ncx {

std::string_view to_string(ErrorClass c) {
  switch (c) {
    case ErrorClass::ParseError: return "ParseError";
    case ErrorClass::UnboundSymbol: return "UnboundSymbol";
    case ErrorClass::ConvexificationFailed: return "ConvexificationFailed";
    case ErrorClass::SolverNumericalFailure: return "SolverNumericalFailure";
    case ErrorClass::SolverInfeasible: return "SolverInfeasible";
    case ErrorClass::GatewayError: return "GatewayError";
  }
  return "?";
}

std::string ErrorReport::describe() const {
  std::string s = std::string(to_string(error_class)) + " during " + stage + ": " + message;
  for (const auto& [k, v] : payload) s += "\n" + k + ": " + v;
  return s;
}

std::string_view to_string(RepairAction::Kind k) {
  using K = RepairAction::Kind;
  switch (k) {
    case K::BindDefault: return "BindDefault";
    case K::EscalateSca: return "EscalateSca";
    case K::ShrinkStep: return "ShrinkStep";
    case K::FiniteBox: return "FiniteBox";
    case K::Restore: return "Restore";
    case K::Restart: return "Restart";
    case K::NoRepair: return "NoRepair";
  }
  return "?";
}

std::string RepairAction::describe() const {
  using K = RepairAction::Kind;
  std::string s(to_string(kind));
  switch (kind) {
    case K::BindDefault: s += "(" + symbol + " = " + format_number(value) + ")"; break;
    case K::ShrinkStep: s += "(" + format_number(amount) + ")"; break;
    case K::FiniteBox: s += "(radius " + format_number(amount) + ")"; break;
    default: break;
  }
  return s;
}

namespace {

using json = nlohmann::json;

RepairAction from_gateway(const std::string& reply) {
  RepairAction a;
  a.source = "gateway";
  auto body = fenced_block(reply).value_or(reply);
  auto j = json::parse(body);
  std::string action = j.at("action").get<std::string>();
  if (action == "bind") {
    a.kind = RepairAction::Kind::BindDefault;
    a.symbol = j.at("name").get<std::string>();
    a.value = j.at("value").get<double>();
  } else if (action == "shrink_step") {
    a.kind = RepairAction::Kind::ShrinkStep;
    a.amount = j.at("factor").get<double>();
    if (!(a.amount > 0 && a.amount < 1)) throw Error("shrink factor outside (0, 1)");
  } else if (action == "finite_box") {
    a.kind = RepairAction::Kind::FiniteBox;
    a.amount = j.at("radius").get<double>();
    if (!(a.amount > 0)) throw Error("box radius must be positive");
  } else if (action == "restart") {
    a.kind = RepairAction::Kind::Restart;
    for (const auto& [k, v] : j.at("x0").items()) a.x0.set(k, v.get<double>());
  } else if (action == "none") {
    a.kind = RepairAction::Kind::NoRepair;
  } else {
    throw Error("unknown repair action '" + action + "'");
  }
  return a;
}

/// [lb, lb + r], [ub - r, ub] or [-r, r] for half-bounded and free families.
void finite_box(EclState& s, double radius) {
  for (auto& v : s.problem.variables) {
    bool lo = std::isfinite(v.lb), hi = std::isfinite(v.ub);
    if (lo && !hi) v.ub = v.lb + radius;
    if (hi && !lo) v.lb = v.ub - radius;
    if (!lo && !hi) {
      v.lb = -radius;
      v.ub = radius;
    }
  }
}

}  // namespace

RepairAction ecl_repair(const ErrorReport& err, const EclState& state, ModelGateway* gateway) {
  RepairAction a;
  switch (err.error_class) {
    case ErrorClass::UnboundSymbol:
      if (auto it = err.payload.find("symbol"); it != err.payload.end() && state.problem.find_param(
                                                                              it->second.substr(0, it->second.find('[')))) {
        a.kind = RepairAction::Kind::BindDefault;
        a.symbol = it->second;
        a.value = 1.0;
        a.note = "parameter " + a.symbol + " had no value; bound to the default 1.0";
        return a;
      }
      break;
    case ErrorClass::ConvexificationFailed:
      if (!state.use_sca && !state.convexify_disabled) {
        a.kind = RepairAction::Kind::EscalateSca;
        a.note = "switching to successive linearization with partial linearization";
        return a;
      }
      break;
    case ErrorClass::SolverNumericalFailure:
      a.kind = RepairAction::Kind::ShrinkStep;
      a.amount = 0.1;
      a.note = "initial step scaled by 0.1 and infinite bounds replaced by a finite box";
      return a;
    case ErrorClass::SolverInfeasible:
      if (!state.restored) {
        a.kind = RepairAction::Kind::Restore;
        a.note = "initial point moved by the restoration phase";
        return a;
      }
      break;
    case ErrorClass::ParseError:
    case ErrorClass::GatewayError:
      break;
  }
  if (!gateway) return a;
  try {
    return from_gateway(gateway->complete(builtin_template(TemplateId::RepairQuery), err.describe()));
  } catch (const std::exception& e) {
    a.note = std::string("gateway repair unavailable: ") + e.what();
    return a;
  }
}

bool apply_repair(const RepairAction& a, EclState& s) {
  using K = RepairAction::Kind;
  switch (a.kind) {
    case K::BindDefault:
      s.problem.set_param(a.symbol, a.value);
      return true;
    case K::EscalateSca:
      s.use_sca = true;
      s.policy.partial_linearization = true;
      return true;
    case K::ShrinkStep:
      s.solve.initial_step *= a.amount;
      finite_box(s, kFiniteBoxRadius);
      return true;
    case K::FiniteBox:
      finite_box(s, a.amount);
      return true;
    case K::Restore:
      s.restored = true;
      s.x0 = restore_point(s.problem, s.x0, 1e-9);
      return true;
    case K::Restart:
      for (const auto& [k, v] : a.x0)
        if (s.x0.contains(k)) s.x0.set(k, v);
      return true;
    case K::NoRepair:
      return false;
  }
  return false;
}

}  // namespace ncx
