#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "ncx/solve.hpp"

namespace ncx {

namespace {

enum class Flavor { Scipy, Cvxpy, Gurobi };

constexpr int kAdd = 1, kMul = 2, kUnary = 3, kPow = 4, kAtom = 5;

struct Text {
  std::string s;
  int level;
};

std::string py_number(double v) {
  std::string s = format_number(v);
  if (s == "inf") return "np.inf";
  if (s == "-inf") return "-np.inf";
  return s;
}

class PyPrinter {
 public:
  PyPrinter(Flavor f, std::string backend, const VariableIndex& vars)
      : flavor_(f), backend_(std::move(backend)), vars_(vars) {}

  std::string operator()(const Expr& e) const { return print(e).s; }

 private:
  std::string wrap(const Expr& e, int min_level) const {
    auto t = print(e);
    return t.level < min_level ? "(" + t.s + ")" : t.s;
  }

  std::string call(const char* fn, const Expr& arg) const { return std::string(fn) + "(" + print(arg).s + ")"; }

  static std::string index_text(std::string_view scalar) {
    // "G[2,3]" -> "G[1, 2]" (zero-based).
    auto open = scalar.find('[');
    if (open == std::string_view::npos) return std::string(scalar);
    std::string out(scalar.substr(0, open + 1));
    std::string_view rest = scalar.substr(open + 1, scalar.size() - open - 2);
    bool first = true;
    while (!rest.empty()) {
      auto comma = rest.find(',');
      auto part = rest.substr(0, comma);
      if (!first) out += ", ";
      out += std::to_string(std::stoi(std::string(part)) - 1);
      first = false;
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    }
    return out + "]";
  }

  [[noreturn]] void unsupported(NodeKind k) const { throw UnsupportedAtom(backend_, k); }

  Text print(const Expr& e) const {
    switch (e.kind()) {
      case NodeKind::Const: {
        double v = e.value();
        return {py_number(v), v < 0 ? kUnary : kAtom};
      }
      case NodeKind::Var: {
        auto k = vars_.find(e.name());
        return {"x[" + std::to_string(k.value_or(0)) + "]", kAtom};
      }
      case NodeKind::Param: return {index_text(e.name()), kAtom};
      case NodeKind::Add: {
        std::string s;
        bool first = true;
        for (const auto& t : e.children()) {
          if (first) {
            s = wrap(t, kAdd);
          } else if (t.kind() == NodeKind::Neg) {
            s += " - " + wrap(t.child(0), kMul);
          } else if (t.is_const() && t.value() < 0) {
            s += " - " + py_number(-t.value());
          } else {
            s += " + " + wrap(t, kMul);
          }
          first = false;
        }
        return {s, kAdd};
      }
      case NodeKind::Mul: {
        std::string s;
        for (std::size_t k = 0; k < e.children().size(); ++k)
          s += (k ? " * " : "") + wrap(e.child(k), k ? kUnary : kMul);
        return {s, kMul};
      }
      case NodeKind::Div: {
        const Expr& den = e.child(1);
        if (flavor_ != Flavor::Scipy && !free_vars(den).empty()) {
          if (flavor_ == Flavor::Cvxpy && free_vars(e.child(0)).empty())
            return {wrap(e.child(0), kMul) + " * " + call("cp.inv_pos", den), kMul};
          unsupported(NodeKind::Div);
        }
        return {wrap(e.child(0), kMul) + " / " + wrap(den, kUnary), kMul};
      }
      case NodeKind::Pow: {
        double p = e.exponent();
        if (flavor_ == Flavor::Cvxpy) return {"cp.power(" + print(e.child(0)).s + ", " + py_number(p) + ")", kAtom};
        if (flavor_ == Flavor::Gurobi && p != 2.0) unsupported(NodeKind::Pow);
        std::string ex = p < 0 ? "(" + py_number(p) + ")" : py_number(p);
        return {wrap(e.child(0), kAtom) + "**" + ex, kPow};
      }
      case NodeKind::Neg: return {"-" + wrap(e.child(0), kUnary), kUnary};
      case NodeKind::Log:
        if (flavor_ == Flavor::Gurobi) unsupported(NodeKind::Log);
        return {call(flavor_ == Flavor::Cvxpy ? "cp.log" : "np.log", e.child(0)), kAtom};
      case NodeKind::Log2:
        if (flavor_ == Flavor::Gurobi) unsupported(NodeKind::Log2);
        if (flavor_ == Flavor::Cvxpy) return {call("cp.log", e.child(0)) + " / np.log(2)", kMul};
        return {call("np.log2", e.child(0)), kAtom};
      case NodeKind::Exp:
        if (flavor_ == Flavor::Gurobi) unsupported(NodeKind::Exp);
        return {call(flavor_ == Flavor::Cvxpy ? "cp.exp" : "np.exp", e.child(0)), kAtom};
      case NodeKind::Abs:
        if (flavor_ == Flavor::Gurobi) unsupported(NodeKind::Abs);
        return {call(flavor_ == Flavor::Cvxpy ? "cp.abs" : "np.abs", e.child(0)), kAtom};
      case NodeKind::Sqrt:
        if (flavor_ == Flavor::Gurobi) unsupported(NodeKind::Sqrt);
        return {call(flavor_ == Flavor::Cvxpy ? "cp.sqrt" : "np.sqrt", e.child(0)), kAtom};
    }
    unsupported(e.kind());
  }

  Flavor flavor_;
  std::string backend_;
  const VariableIndex& vars_;
};

std::string identifier(std::string_view s) {
  std::string out;
  for (char ch : s) out += std::isalnum(static_cast<unsigned char>(ch)) ? ch : '_';
  if (out.empty() || std::isdigit(static_cast<unsigned char>(out[0]))) out = "_" + out;
  return out;
}

std::string nested_values(const std::vector<double>& v, const std::vector<int>& shape, std::size_t dim,
                          std::size_t& at) {
  std::string s = "[";
  for (int k = 0; k < shape[dim]; ++k) {
    if (k) s += ", ";
    s += dim + 1 == shape.size() ? py_number(v[at++]) : nested_values(v, shape, dim + 1, at);
  }
  return s + "]";
}

void emit_parameters(std::ostringstream& os, const Problem& pb) {
  if (pb.parameters.empty()) return;
  os << "# Parameters\n";
  for (const auto& p : pb.parameters) {
    os << p.name << " = ";
    if (!p.values) {
      os << "None\n";
    } else if (p.shape.empty()) {
      os << py_number(p.values->front()) << "\n";
    } else {
      std::size_t at = 0;
      os << "np.array(" << nested_values(*p.values, p.shape, 0, at) << ")\n";
    }
  }
  os << "\n";
}

/// Rows of the same group, in order of first appearance.
std::vector<std::pair<std::string, std::vector<Expr>>> grouped(const std::vector<Constraint>& rows) {
  std::vector<std::pair<std::string, std::vector<Expr>>> out;
  for (const auto& r : rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const auto& g) { return g.first == r.group; });
    if (it == out.end()) {
      out.push_back({r.group, {}});
      it = out.end() - 1;
    }
    it->second.push_back(r.expr);
  }
  return out;
}

std::string bound_text(double v) { return std::isfinite(v) ? py_number(v) : "None"; }

std::string scipy_script(const Problem& pb, const Assignment& x0) {
  auto vars = pb.variable_index();
  PyPrinter py(Flavor::Scipy, "script:scipy", vars);
  bool maximize = pb.direction == Direction::Maximize;
  std::ostringstream os;
  os << "import numpy as np\nfrom scipy.optimize import minimize\n\n";
  emit_parameters(os, pb);

  os << "# Objective\ndef objective(x):\n";
  if (maximize)
    os << "    return -(" << py(pb.objective) << ")  # maximize\n\n";
  else
    os << "    return " << py(pb.objective) << "\n\n";

  std::vector<std::string> specs;
  auto emit_group = [&](const std::string& name, const std::vector<Expr>& rows, bool ineq) {
    std::string fn = "constraint_" + identifier(name);
    os << "def " << fn << "(x):\n";
    // scipy expects fun(x) >= 0 for inequalities.
    auto row = [&](const Expr& e) { return ineq ? py(Expr::neg(e)) : py(e); };
    if (rows.size() == 1) {
      os << "    return " << row(rows[0]) << "\n\n";
    } else {
      os << "    return np.array([\n";
      for (const auto& e : rows) os << "        " << row(e) << ",\n";
      os << "    ])\n\n";
    }
    specs.push_back("{'type': '" + std::string(ineq ? "ineq" : "eq") + "', 'fun': " + fn + "}");
  };
  if (!pb.ineq.empty() || !pb.eq.empty()) {
    os << "# Constraints\n";
    for (const auto& [name, rows] : grouped(pb.ineq)) emit_group(name, rows, true);
    for (const auto& [name, rows] : grouped(pb.eq)) emit_group(name, rows, false);
  }

  os << "# Initial guess\nx0 = np.array([";
  for (std::size_t k = 0; k < vars.size(); ++k) os << (k ? ", " : "") << py_number(x0.at(vars.name(k)));
  os << "])\n\n# Bounds\nbounds = [";
  auto svars = pb.scalar_variables();
  for (std::size_t k = 0; k < svars.size(); ++k)
    os << (k ? ", " : "") << "(" << bound_text(svars[k].lb) << ", " << bound_text(svars[k].ub) << ")";
  os << "]\n\n";

  if (!specs.empty()) {
    os << "constraints = [";
    for (std::size_t k = 0; k < specs.size(); ++k) os << (k ? ",\n               " : "") << specs[k];
    os << "]\n\n";
  }
  os << "result = minimize(objective, x0, bounds=bounds" << (specs.empty() ? "" : ", constraints=constraints")
     << ")\n\n";
  os << "print(\"Objective Function Value:\", " << (maximize ? "-result.fun" : "result.fun") << ")\n";
  os << "print(\"Solution:\", result.x)\n";
  return os.str();
}

std::string cvxpy_script(const Problem& pb) {
  auto vars = pb.variable_index();
  PyPrinter py(Flavor::Cvxpy, "script:cvxpy", vars);
  std::ostringstream os;
  os << "import cvxpy as cp\nimport numpy as np\n\n";
  emit_parameters(os, pb);
  os << "x = cp.Variable(" << vars.size() << ")\n\n";
  os << "objective = cp." << (pb.direction == Direction::Maximize ? "Maximize" : "Minimize") << "("
     << py(pb.objective) << ")\n";
  std::vector<std::string> rows;
  auto svars = pb.scalar_variables();
  for (std::size_t k = 0; k < svars.size(); ++k) {
    if (std::isfinite(svars[k].lb)) rows.push_back("x[" + std::to_string(k) + "] >= " + py_number(svars[k].lb));
    if (std::isfinite(svars[k].ub)) rows.push_back("x[" + std::to_string(k) + "] <= " + py_number(svars[k].ub));
  }
  for (const auto& r : pb.ineq) rows.push_back(py(r.expr) + " <= 0");
  for (const auto& r : pb.eq) rows.push_back(py(r.expr) + " == 0");
  if (!rows.empty()) {
    os << "constraints = [\n";
    for (const auto& r : rows) os << "    " << r << ",\n";
    os << "]\n";
  }
  os << "\nproblem = cp.Problem(objective" << (rows.empty() ? "" : ", constraints") << ")\n";
  os << "problem.solve()\n\n";
  os << "print(\"Objective Function Value:\", problem.value)\n";
  os << "print(\"Solution:\", x.value)\n";
  return os.str();
}

std::string gurobi_script(const Problem& pb) {
  auto vars = pb.variable_index();
  PyPrinter py(Flavor::Gurobi, "script:gurobi", vars);
  std::ostringstream os;
  os << "import gurobipy as gp\nimport numpy as np\nfrom gurobipy import GRB\n\n";
  emit_parameters(os, pb);
  auto gb = [](double v) {
    return std::isfinite(v) ? py_number(v) : (v > 0 ? "GRB.INFINITY" : "-GRB.INFINITY");
  };
  auto svars = pb.scalar_variables();
  std::string lbs, ubs;
  for (std::size_t k = 0; k < svars.size(); ++k) {
    lbs += (k ? ", " : "") + gb(svars[k].lb);
    ubs += (k ? ", " : "") + gb(svars[k].ub);
  }
  std::string objective = py(pb.objective);
  std::vector<std::string> rows;
  for (const auto& r : pb.ineq) rows.push_back("m.addConstr(" + py(r.expr) + " <= 0, name=\"" + r.group + "\")");
  for (const auto& r : pb.eq) rows.push_back("m.addConstr(" + py(r.expr) + " == 0, name=\"" + r.group + "\")");

  os << "m = gp.Model(\"" << pb.name << "\")\n";
  os << "x = m.addVars(" << vars.size() << ", lb=[" << lbs << "], ub=[" << ubs << "], name=\"x\")\n\n";
  os << "m.setObjective(" << objective << ", GRB." << (pb.direction == Direction::Maximize ? "MAXIMIZE" : "MINIMIZE")
     << ")\n";
  if (!rows.empty()) {
    os << "\n";
    for (const auto& r : rows) os << r << "\n";
  }
  os << "\nm.optimize()\n\n";
  os << "print(\"Objective Function Value:\", m.ObjVal)\n";
  os << "print(\"Solution:\", [x[k].X for k in range(" << vars.size() << ")])\n";
  return os.str();
}

}  // namespace

std::string emit_script(const ConvexProblem& pc, const BackendId& backend) {
  if (!backend.is_script()) throw UnsupportedBackend(backend.to_string() + " is not a script backend");
  const Problem& pb = pc.problem();
  const auto& name = backend.script_name();
  if (name == "scipy") {
    Assignment x0 = default_reference_point(pb);
    if (pc.record().reference)
      for (const auto& [k, v] : *pc.record().reference)
        if (x0.contains(k)) x0.set(k, v);
    return scipy_script(pb, x0);
  }
  if (name == "cvxpy") return cvxpy_script(pb);
  if (name == "gurobi") return gurobi_script(pb);
  throw UnsupportedBackend("unknown script backend '" + name + "'");
}

}  // namespace ncx
