#include "ncx/problem.hpp"

#include <cmath>
#include <numeric>

namespace ncx {

std::string_view to_string(Direction d) {
  return d == Direction::Minimize ? "minimize" : "maximize";
}

std::string_view to_string(VarKind k) {
  switch (k) {
    case VarKind::Continuous: return "continuous";
    case VarKind::Integer: return "integer";
    case VarKind::Binary: return "binary";
  }
  return "?";
}

namespace {

std::vector<std::string> expand_names(const std::string& name, const std::vector<int>& shape) {
  if (shape.empty()) return {name};
  std::vector<std::string> out;
  std::vector<int> idx(shape.size(), 1);
  while (true) {
    std::string s = name + "[";
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (k) s += ",";
      s += std::to_string(idx[k]);
    }
    out.push_back(s + "]");
    std::size_t k = idx.size();
    while (k-- > 0) {
      if (++idx[k] <= shape[k]) break;
      idx[k] = 1;
    }
    if (k == static_cast<std::size_t>(-1)) break;
  }
  return out;
}

/// Splits "G[2,1]" into ("G", {2,1}); plain names give an empty index list.
std::pair<std::string_view, std::vector<int>> split_scalar(std::string_view s) {
  auto open = s.find('[');
  if (open == std::string_view::npos || s.back() != ']') return {s, {}};
  std::vector<int> idx;
  int cur = 0;
  bool any = false;
  for (std::size_t i = open + 1; i + 1 < s.size(); ++i) {
    char c = s[i];
    if (c >= '0' && c <= '9') {
      cur = cur * 10 + (c - '0');
      any = true;
    } else if (c == ',') {
      idx.push_back(cur);
      cur = 0;
    } else {
      return {s, {}};
    }
  }
  if (!any) return {s, {}};
  idx.push_back(cur);
  return {s.substr(0, open), idx};
}

std::optional<std::size_t> flat_offset(const std::vector<int>& shape, const std::vector<int>& idx) {
  if (idx.size() != shape.size()) return std::nullopt;
  std::size_t off = 0;
  for (std::size_t k = 0; k < shape.size(); ++k) {
    if (idx[k] < 1 || idx[k] > shape[k]) return std::nullopt;
    off = off * static_cast<std::size_t>(shape[k]) + static_cast<std::size_t>(idx[k] - 1);
  }
  return off;
}

}  // namespace

std::vector<std::string> VarDecl::scalar_names() const { return expand_names(name, shape); }

void VarDecl::validate() const {
  for (int e : shape)
    if (e < 1) throw BoundViolation("array length of '" + name + "' must be at least 1");
  if (std::isnan(lb) || std::isnan(ub) || lb > ub)
    throw BoundViolation("lower bound exceeds upper bound for '" + name + "'");
  if (kind == VarKind::Binary && (lb != 0.0 || ub != 1.0))
    throw BoundViolation("binary variable '" + name + "' must have bounds [0, 1]");
}

std::vector<std::string> ParamDecl::scalar_names() const { return expand_names(name, shape); }

std::vector<ScalarVar> Problem::scalar_variables() const {
  std::vector<ScalarVar> out;
  for (const auto& v : variables)
    for (auto& n : v.scalar_names()) out.push_back({std::move(n), v.name, v.kind, v.lb, v.ub});
  return out;
}

VariableIndex Problem::variable_index() const {
  std::vector<std::string> names;
  for (const auto& v : variables)
    for (auto& n : v.scalar_names()) names.push_back(std::move(n));
  return VariableIndex(std::move(names));
}

const VarDecl* Problem::find_family(std::string_view name) const {
  for (const auto& v : variables)
    if (v.name == name) return &v;
  return nullptr;
}

VarDecl* Problem::find_family(std::string_view name) {
  for (auto& v : variables)
    if (v.name == name) return &v;
  return nullptr;
}

const VarDecl* Problem::family_of(std::string_view scalar) const {
  auto [base, idx] = split_scalar(scalar);
  const VarDecl* d = find_family(base);
  if (d && (idx.empty() ? d->shape.empty() : flat_offset(d->shape, idx).has_value())) return d;
  // Names containing brackets that are not index suffixes.
  d = find_family(scalar);
  return d && d->shape.empty() ? d : nullptr;
}

const ParamDecl* Problem::find_param(std::string_view name) const {
  for (const auto& p : parameters)
    if (p.name == name) return &p;
  return nullptr;
}

std::optional<double> Problem::param_value(std::string_view scalar) const {
  auto [base, idx] = split_scalar(scalar);
  const ParamDecl* p = find_param(base);
  if (!p || !p->values) return std::nullopt;
  if (idx.empty()) {
    if (!p->shape.empty() || p->values->size() != 1) return std::nullopt;
    return p->values->front();
  }
  auto off = flat_offset(p->shape, idx);
  if (!off || *off >= p->values->size()) return std::nullopt;
  return (*p->values)[*off];
}

ParamLookup Problem::param_lookup() const {
  return [this](std::string_view n) { return param_value(n); };
}

Assignment Problem::param_assignment() const {
  Assignment a;
  for (const auto& p : parameters) {
    if (!p.values) continue;
    auto names = p.scalar_names();
    for (std::size_t i = 0; i < names.size() && i < p.values->size(); ++i)
      a.set(names[i], (*p.values)[i]);
  }
  return a;
}

Assignment Problem::bind(const Assignment& x) const {
  Assignment a = param_assignment();
  a.merge(x);
  return a;
}

void Problem::set_param(const std::string& name, double value) {
  auto [base, idx] = split_scalar(name);
  for (auto& p : parameters) {
    if (p.name != base) continue;
    std::size_t n = 1;
    for (int e : p.shape) n *= static_cast<std::size_t>(e);
    if (!p.values) p.values = std::vector<double>(n, value);
    if (idx.empty()) {
      std::fill(p.values->begin(), p.values->end(), value);
    } else if (auto off = flat_offset(p.shape, idx)) {
      (*p.values)[*off] = value;
    }
    return;
  }
  parameters.push_back({name, {}, std::vector<double>{value}});
}

}  // namespace ncx
