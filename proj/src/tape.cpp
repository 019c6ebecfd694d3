#include "ncx/tape.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_map>

namespace ncx {

VariableIndex::VariableIndex(std::vector<std::string> names) : names_(std::move(names)) {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (!position_.emplace(names_[i], i).second)
      throw DuplicateDeclaration(names_[i]);
  }
}

std::optional<std::size_t> VariableIndex::find(std::string_view name) const {
  auto it = position_.find(name);
  if (it == position_.end()) return std::nullopt;
  return it->second;
}

std::vector<double> VariableIndex::pack(const Assignment& a) const {
  std::vector<double> x(names_.size());
  for (std::size_t i = 0; i < names_.size(); ++i) x[i] = a.at(names_[i]);
  return x;
}

Assignment VariableIndex::unpack(std::span<const double> x) const {
  Assignment a;
  for (std::size_t i = 0; i < names_.size(); ++i) a.set(names_[i], x[i]);
  return a;
}

Tape Tape::compile(const Expr& expr, const VariableIndex& vars, const ParamLookup& params) {
  Tape t;
  t.dimension_ = vars.size();
  std::unordered_map<const void*, std::uint32_t> slot_of;
  std::vector<std::size_t> support;

  auto emit = [&](auto&& self, const Expr& e) -> std::uint32_t {
    if (auto it = slot_of.find(e.id()); it != slot_of.end()) return it->second;
    Instr ins;
    ins.op = e.kind();
    switch (e.kind()) {
      case NodeKind::Const: ins.c = e.value(); break;
      case NodeKind::Param: {
        auto v = params ? params(e.name()) : std::nullopt;
        if (!v) throw UnboundSymbol(e.name());
        ins.op = NodeKind::Const;
        ins.c = *v;
        break;
      }
      case NodeKind::Var: {
        auto pos = vars.find(e.name());
        if (!pos) throw UnboundSymbol(e.name());
        ins.var = *pos;
        support.push_back(*pos);
        break;
      }
      default: {
        std::vector<std::uint32_t> kids;
        for (const auto& c : e.children()) kids.push_back(self(self, c));
        ins.first_arg = static_cast<std::uint32_t>(t.args_.size());
        ins.n_args = static_cast<std::uint32_t>(kids.size());
        t.args_.insert(t.args_.end(), kids.begin(), kids.end());
        if (e.kind() == NodeKind::Pow) ins.c = e.exponent();
        break;
      }
    }
    t.code_.push_back(ins);
    auto slot = static_cast<std::uint32_t>(t.code_.size() - 1);
    slot_of.emplace(e.id(), slot);
    return slot;
  };
  emit(emit, expr);

  std::sort(support.begin(), support.end());
  support.erase(std::unique(support.begin(), support.end()), support.end());
  t.support_ = std::move(support);
  return t;
}

EvalStatus Tape::forward(std::span<const double> x, std::vector<double>& s) const noexcept {
  s.resize(code_.size());
  for (std::size_t i = 0; i < code_.size(); ++i) {
    const Instr& in = code_[i];
    const std::uint32_t* a = args_.data() + in.first_arg;
    double v = 0.0;
    switch (in.op) {
      case NodeKind::Const: v = in.c; break;
      case NodeKind::Var: v = x[in.var]; break;
      case NodeKind::Add:
        for (std::uint32_t k = 0; k < in.n_args; ++k) v += s[a[k]];
        break;
      case NodeKind::Mul:
        v = 1.0;
        for (std::uint32_t k = 0; k < in.n_args; ++k) v *= s[a[k]];
        break;
      case NodeKind::Div:
        if (s[a[1]] == 0.0) return EvalStatus::Domain;
        v = s[a[0]] / s[a[1]];
        break;
      case NodeKind::Pow: {
        double b = s[a[0]];
        if (b < 0.0 && in.c != std::floor(in.c)) return EvalStatus::Domain;
        if (b == 0.0 && in.c < 0.0) return EvalStatus::Domain;
        v = std::pow(b, in.c);
        break;
      }
      case NodeKind::Neg: v = -s[a[0]]; break;
      case NodeKind::Log:
        if (s[a[0]] <= 0.0) return EvalStatus::Domain;
        v = std::log(s[a[0]]);
        break;
      case NodeKind::Log2:
        if (s[a[0]] <= 0.0) return EvalStatus::Domain;
        v = std::log2(s[a[0]]);
        break;
      case NodeKind::Exp: v = std::exp(s[a[0]]); break;
      case NodeKind::Abs: v = std::fabs(s[a[0]]); break;
      case NodeKind::Sqrt:
        if (s[a[0]] < 0.0) return EvalStatus::Domain;
        v = std::sqrt(s[a[0]]);
        break;
      case NodeKind::Param: return EvalStatus::Domain;
    }
    if (!std::isfinite(v)) return EvalStatus::Domain;
    s[i] = v;
  }
  return EvalStatus::Ok;
}

EvalStatus Tape::try_value(std::span<const double> x, double& out) const noexcept {
  thread_local std::vector<double> slots;
  EvalStatus st = forward(x, slots);
  if (st == EvalStatus::Ok) out = slots.back();
  return st;
}

EvalStatus Tape::try_value_and_gradient(std::span<const double> x, double& out,
                                        std::span<double> grad) const noexcept {
  thread_local std::vector<double> slots;
  thread_local std::vector<double> adj;
  EvalStatus st = forward(x, slots);
  if (st != EvalStatus::Ok) return st;
  out = slots.back();
  std::fill(grad.begin(), grad.end(), 0.0);
  adj.assign(code_.size(), 0.0);
  adj.back() = 1.0;
  for (std::size_t i = code_.size(); i-- > 0;) {
    const Instr& in = code_[i];
    double g = adj[i];
    if (g == 0.0) continue;
    const std::uint32_t* a = args_.data() + in.first_arg;
    switch (in.op) {
      case NodeKind::Const:
      case NodeKind::Param: break;
      case NodeKind::Var: grad[in.var] += g; break;
      case NodeKind::Add:
        for (std::uint32_t k = 0; k < in.n_args; ++k) adj[a[k]] += g;
        break;
      case NodeKind::Mul:
        for (std::uint32_t k = 0; k < in.n_args; ++k) {
          double others = 1.0;
          for (std::uint32_t j = 0; j < in.n_args; ++j)
            if (j != k) others *= slots[a[j]];
          adj[a[k]] += g * others;
        }
        break;
      case NodeKind::Div: {
        double den = slots[a[1]];
        adj[a[0]] += g / den;
        adj[a[1]] -= g * slots[a[0]] / (den * den);
        break;
      }
      case NodeKind::Pow: {
        double b = slots[a[0]];
        double p = in.c;
        if (p == 0.0) break;
        if (b == 0.0 && p < 1.0) return EvalStatus::NonDifferentiable;
        adj[a[0]] += g * p * std::pow(b, p - 1.0);
        break;
      }
      case NodeKind::Neg: adj[a[0]] -= g; break;
      case NodeKind::Log: adj[a[0]] += g / slots[a[0]]; break;
      case NodeKind::Log2: adj[a[0]] += g / (slots[a[0]] * std::numbers::ln2); break;
      case NodeKind::Exp: adj[a[0]] += g * slots[i]; break;
      case NodeKind::Abs: {
        double u = slots[a[0]];
        adj[a[0]] += u > 0.0 ? g : (u < 0.0 ? -g : 0.0);
        break;
      }
      case NodeKind::Sqrt:
        if (slots[i] == 0.0) return EvalStatus::NonDifferentiable;
        adj[a[0]] += g * 0.5 / slots[i];
        break;
    }
  }
  for (double v : grad)
    if (!std::isfinite(v)) return EvalStatus::Domain;
  return EvalStatus::Ok;
}

double Tape::value(std::span<const double> x) const {
  double out = 0.0;
  if (try_value(x, out) != EvalStatus::Ok) throw DomainError("expression undefined at the given point");
  return out;
}

double Tape::value_and_gradient(std::span<const double> x, std::span<double> grad) const {
  double out = 0.0;
  switch (try_value_and_gradient(x, out, grad)) {
    case EvalStatus::Ok: return out;
    case EvalStatus::Domain: throw DomainError("expression undefined at the given point");
    case EvalStatus::NonDifferentiable: throw NonDifferentiable("the given point");
  }
  return out;
}

}  // namespace ncx
