#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ncx/model_io.hpp"

namespace ncx {

using ojson = nlohmann::ordered_json;

namespace {

constexpr std::size_t kMaxJsonDepth = 1000;

bool is_identifier(const std::string& s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  static const std::set<std::string> reserved = {
      "problem", "param", "var", "minimize", "maximize", "optimize", "subject", "to", "for", "in",
      "continuous", "integer", "binary", "sum", "log", "log2", "exp", "abs", "sqrt", "inf"};
  return !reserved.count(s);
}

class Reader {
 public:
  Problem read(const ojson& j) {
    if (!j.is_object()) throw SchemaError("", "expected an object");
    if (j.contains("name")) {
      if (!j["name"].is_string()) throw SchemaError("/name", "expected a string");
      pb_.name = j["name"].get<std::string>();
    }
    if (!j.contains("direction") || !j["direction"].is_string())
      throw SchemaError("/direction", "expected \"minimize\" or \"maximize\"");
    auto dir = j["direction"].get<std::string>();
    if (dir == "maximize")
      pb_.direction = Direction::Maximize;
    else if (dir == "minimize" || dir == "optimize")
      pb_.direction = Direction::Minimize;
    else
      throw SchemaError("/direction", "expected \"minimize\" or \"maximize\"");

    read_parameters(j);
    read_variables(j);

    if (!j.contains("objective")) throw SchemaError("/objective", "missing");
    pb_.objective = expr(j["objective"], "/objective", 0);
    read_rows(j, "ineq", pb_.ineq);
    read_rows(j, "eq", pb_.eq);
    return std::move(pb_);
  }

 private:
  static std::vector<int> shape_of(const ojson& v, const std::string& path, std::vector<double>& out,
                                   std::size_t depth) {
    if (depth > 8) throw SchemaError(path, "too many dimensions");
    if (v.is_number()) {
      double d = v.get<double>();
      if (!std::isfinite(d)) throw SchemaError(path, "expected a finite number");
      out.push_back(d);
      return {};
    }
    if (!v.is_array() || v.empty()) throw SchemaError(path, "expected a number or nonempty array");
    std::vector<int> inner;
    for (std::size_t k = 0; k < v.size(); ++k) {
      auto s = shape_of(v[k], path + "/" + std::to_string(k), out, depth + 1);
      if (k > 0 && s != inner) throw SchemaError(path + "/" + std::to_string(k), "ragged array");
      inner = std::move(s);
    }
    std::vector<int> shape{static_cast<int>(v.size())};
    shape.insert(shape.end(), inner.begin(), inner.end());
    return shape;
  }

  void declare(const std::string& name, const std::string& path) {
    if (!is_identifier(name)) throw SchemaError(path, "invalid identifier '" + name + "'");
    if (!names_.insert(name).second) throw SchemaError(path, "duplicate declaration of '" + name + "'");
  }

  static std::vector<int> read_shape(const ojson& s, const std::string& path) {
    if (!s.is_array()) throw SchemaError(path, "expected an array of extents");
    std::vector<int> shape;
    for (std::size_t k = 0; k < s.size(); ++k) {
      if (!s[k].is_number_integer() || s[k].get<std::int64_t>() < 1 || s[k].get<std::int64_t>() > 1'000'000)
        throw SchemaError(path + "/" + std::to_string(k), "expected a positive integer");
      shape.push_back(s[k].get<int>());
    }
    return shape;
  }

  void read_parameters(const ojson& j) {
    if (!j.contains("parameters")) return;
    const auto& ps = j["parameters"];
    if (!ps.is_object()) throw SchemaError("/parameters", "expected an object");
    for (auto it = ps.begin(); it != ps.end(); ++it) {
      std::string path = "/parameters/" + it.key();
      declare(it.key(), path);
      ParamDecl p;
      p.name = it.key();
      const auto& v = it.value();
      if (v.is_null()) {
      } else if (v.is_object()) {
        if (v.contains("shape")) p.shape = read_shape(v["shape"], path + "/shape");
        if (v.contains("values") && !v["values"].is_null()) {
          std::vector<double> vals;
          auto s = shape_of(v["values"], path + "/values", vals, 0);
          if (v.contains("shape") && s != p.shape) throw SchemaError(path + "/values", "shape mismatch");
          p.shape = s;
          p.values = std::move(vals);
        }
      } else {
        std::vector<double> vals;
        p.shape = shape_of(v, path, vals, 0);
        p.values = std::move(vals);
      }
      pb_.parameters.push_back(std::move(p));
    }
  }

  static double bound(const ojson& b, const std::string& path, double absent) {
    if (b.is_null()) return absent;
    if (!b.is_number()) throw SchemaError(path, "expected a number or null");
    return b.get<double>();
  }

  void read_variables(const ojson& j) {
    if (!j.contains("variables") || !j["variables"].is_array())
      throw SchemaError("/variables", "expected an array");
    const auto& vs = j["variables"];
    for (std::size_t k = 0; k < vs.size(); ++k) {
      std::string path = "/variables/" + std::to_string(k);
      const auto& v = vs[k];
      if (!v.is_object()) throw SchemaError(path, "expected an object");
      if (!v.contains("name") || !v["name"].is_string()) throw SchemaError(path + "/name", "expected a string");
      VarDecl d;
      d.name = v["name"].get<std::string>();
      declare(d.name, path + "/name");
      std::string kind = v.contains("kind") && v["kind"].is_string() ? v["kind"].get<std::string>() : "";
      if (kind == "continuous")
        d.kind = VarKind::Continuous;
      else if (kind == "integer")
        d.kind = VarKind::Integer;
      else if (kind == "binary")
        d.kind = VarKind::Binary;
      else
        throw SchemaError(path + "/kind", "expected continuous, integer or binary");
      d.lb = bound(v.value("lb", ojson()), path + "/lb", d.kind == VarKind::Binary ? 0.0 : -kInf);
      d.ub = bound(v.value("ub", ojson()), path + "/ub", d.kind == VarKind::Binary ? 1.0 : kInf);
      if (v.contains("shape")) d.shape = read_shape(v["shape"], path + "/shape");
      try {
        d.validate();
      } catch (const BoundViolation& e) {
        throw SchemaError(path, e.what());
      }
      pb_.variables.push_back(std::move(d));
    }
  }

  void read_rows(const ojson& j, const std::string& key, std::vector<Constraint>& rows) {
    if (!j.contains(key)) return;
    const auto& a = j[key];
    if (!a.is_array()) throw SchemaError("/" + key, "expected an array");
    const ojson* groups = nullptr;
    std::string gkey = key + "_groups";
    if (j.contains(gkey)) {
      groups = &j[gkey];
      if (!groups->is_array() || groups->size() != a.size())
        throw SchemaError("/" + gkey, "expected one label per row");
    }
    for (std::size_t k = 0; k < a.size(); ++k) {
      Constraint c;
      c.expr = expr(a[k], "/" + key + "/" + std::to_string(k), 0);
      if (groups) {
        const auto& g = (*groups)[k];
        std::string gp = "/" + gkey + "/" + std::to_string(k);
        if (!g.is_string() || !is_identifier(g.get<std::string>())) throw SchemaError(gp, "expected a label");
        c.group = g.get<std::string>();
      } else {
        c.group = "c" + std::to_string(++auto_label_);
      }
      rows.push_back(std::move(c));
    }
  }

  const ojson& args(const ojson& n, const std::string& path, std::size_t want) {
    if (!n.contains("args") || !n["args"].is_array()) throw SchemaError(path + "/args", "expected an array");
    const auto& a = n["args"];
    if (want != 0 && a.size() != want)
      throw SchemaError(path + "/args", "expected " + std::to_string(want) + " arguments");
    return a;
  }

  void check_symbol(const std::string& name, bool var, const std::string& path) const {
    if (var) {
      const VarDecl* d = pb_.family_of(name);
      bool ok = d && (d->shape.empty() ? name == d->name : name != d->name);
      if (!ok) throw SchemaError(path, "undeclared variable '" + name + "'");
      return;
    }
    auto open = name.find('[');
    std::string base = name.substr(0, open);
    const ParamDecl* p = pb_.find_param(base);
    if (!p) throw SchemaError(path, "undeclared parameter '" + name + "'");
    bool ok = open == std::string::npos ? p->shape.empty() : !p->shape.empty();
    if (ok && open != std::string::npos) {
      // Check the index is in range by expanding the declared names.
      auto names = p->scalar_names();
      ok = std::find(names.begin(), names.end(), name) != names.end();
    }
    if (!ok) throw SchemaError(path, "undeclared parameter '" + name + "'");
  }

  Expr expr(const ojson& n, const std::string& path, std::size_t depth) {
    if (depth > kMaxJsonDepth) throw SchemaError(path, "nesting too deep");
    if (!n.is_object() || !n.contains("op") || !n["op"].is_string())
      throw SchemaError(path, "expected an expression node with \"op\"");
    auto op = n["op"].get<std::string>();
    auto child = [&](const ojson& a, std::size_t k) {
      return expr(a[k], path + "/args/" + std::to_string(k), depth + 1);
    };
    if (op == "const") {
      if (!n.contains("value") || !n["value"].is_number()) throw SchemaError(path + "/value", "expected a number");
      return Expr::constant(n["value"].get<double>());
    }
    if (op == "var" || op == "param") {
      if (!n.contains("name") || !n["name"].is_string()) throw SchemaError(path + "/name", "expected a string");
      auto name = n["name"].get<std::string>();
      check_symbol(name, op == "var", path + "/name");
      return op == "var" ? Expr::variable(name) : Expr::parameter(name);
    }
    if (op == "add" || op == "mul") {
      const auto& a = args(n, path, 0);
      if (a.size() < 2) throw SchemaError(path + "/args", "expected at least 2 arguments");
      std::vector<Expr> cs;
      for (std::size_t k = 0; k < a.size(); ++k) cs.push_back(child(a, k));
      return op == "add" ? Expr::add(std::move(cs)) : Expr::mul(std::move(cs));
    }
    if (op == "div") {
      const auto& a = args(n, path, 2);
      Expr num = child(a, 0), den = child(a, 1);
      if (den.is_const(0.0)) throw SchemaError(path + "/args/1", "denominator is the constant 0");
      return Expr::div(num, den);
    }
    if (op == "pow") {
      const auto& a = args(n, path, 2);
      Expr base = child(a, 0), e = child(a, 1);
      if (!e.is_const()) throw SchemaError(path + "/args/1", "exponent must be a constant");
      return Expr::pow(base, e.value());
    }
    static const std::map<std::string, Expr (*)(Expr)> unary = {
        {"neg", &Expr::neg}, {"log", &Expr::log}, {"log2", &Expr::log2},
        {"exp", &Expr::exp}, {"abs", &Expr::abs}, {"sqrt", &Expr::sqrt}};
    if (auto it = unary.find(op); it != unary.end()) {
      const auto& a = args(n, path, 1);
      return it->second(child(a, 0));
    }
    throw SchemaError(path + "/op", "unknown operator '" + op + "'");
  }

  Problem pb_;
  std::set<std::string> names_;
  int auto_label_ = 0;
};

ojson node(const Expr& e) {
  ojson j;
  j["op"] = std::string(to_string(e.kind()));
  switch (e.kind()) {
    case NodeKind::Const: j["value"] = e.value(); return j;
    case NodeKind::Var:
    case NodeKind::Param: j["name"] = e.name(); return j;
    case NodeKind::Pow:
      j["args"] = ojson::array({node(e.child(0)), ojson{{"op", "const"}, {"value", e.exponent()}}});
      return j;
    default: {
      ojson a = ojson::array();
      for (const auto& c : e.children()) a.push_back(node(c));
      j["args"] = std::move(a);
      return j;
    }
  }
}

ojson bound_json(double v) { return std::isinf(v) ? ojson() : ojson(v); }

ojson nested(const std::vector<double>& v, const std::vector<int>& shape, std::size_t dim, std::size_t& at) {
  ojson a = ojson::array();
  for (int k = 0; k < shape[dim]; ++k)
    a.push_back(dim + 1 < shape.size() ? nested(v, shape, dim + 1, at) : ojson(v[at++]));
  return a;
}

}  // namespace

Problem parse_json(std::string_view bytes) {
  ojson j;
  try {
    j = ojson::parse(bytes.begin(), bytes.end());
  } catch (const ojson::parse_error& e) {
    throw SchemaError("", std::string("invalid JSON: ") + e.what());
  }
  return Reader().read(j);
}

std::string emit_json(const Problem& pb) {
  ojson j;
  j["name"] = pb.name;
  j["direction"] = std::string(to_string(pb.direction));
  ojson vars = ojson::array();
  for (const auto& v : pb.variables) {
    ojson d;
    d["name"] = v.name;
    d["kind"] = std::string(to_string(v.kind));
    d["lb"] = bound_json(v.lb);
    d["ub"] = bound_json(v.ub);
    if (!v.shape.empty()) d["shape"] = v.shape;
    vars.push_back(std::move(d));
  }
  j["variables"] = std::move(vars);
  ojson params = ojson::object();
  for (const auto& p : pb.parameters) {
    if (!p.values) {
      params[p.name] = p.shape.empty() ? ojson() : ojson{{"shape", p.shape}, {"values", nullptr}};
    } else if (p.shape.empty()) {
      params[p.name] = p.values->front();
    } else {
      std::size_t at = 0;
      params[p.name] = nested(*p.values, p.shape, 0, at);
    }
  }
  j["parameters"] = std::move(params);
  j["objective"] = node(pb.objective);
  for (auto [key, rows] : {std::pair{"ineq", &pb.ineq}, std::pair{"eq", &pb.eq}}) {
    ojson a = ojson::array(), g = ojson::array();
    for (const auto& c : *rows) {
      a.push_back(node(c.expr));
      g.push_back(c.group);
    }
    j[key] = std::move(a);
    j[std::string(key) + "_groups"] = std::move(g);
  }
  return j.dump(2) + "\n";
}

Problem parse_any(std::string_view text) {
  auto p = text.find_first_not_of(" \t\r\n");
  if (p != std::string_view::npos && text[p] == '{') return parse_json(text);
  return parse_problem(text);
}

Problem load_problem_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_any(ss.str());
}

}  // namespace ncx
