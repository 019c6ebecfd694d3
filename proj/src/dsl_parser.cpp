#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <set>

#include "ncx/model_io.hpp"

namespace ncx {

namespace {

enum class Tok { Ident, Number, String, Op, Newline, End };

struct Token {
  Tok kind;
  std::string text;
  double num = 0.0;
  int line = 1;
  int col = 1;
};

constexpr std::size_t kMaxDepth = 1000;
constexpr std::int64_t kMaxExpansion = 1'000'000;

const std::set<std::string, std::less<>> kKeywords = {
    "problem", "param",   "var",     "minimize", "maximize", "optimize", "subject", "to",
    "for",     "in",      "continuous", "integer", "binary", "sum",     "log",     "log2",
    "exp",     "abs",     "sqrt",    "inf"};

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  int line = 1, col = 1, depth = 0;
  std::size_t i = 0;
  auto push = [&](Tok k, std::string text, int c0) { out.push_back({k, std::move(text), 0.0, line, c0}); };
  auto newline = [&](int c0) {
    if (depth == 0 && !out.empty() && out.back().kind != Tok::Newline) push(Tok::Newline, "\n", c0);
  };

  while (i < src.size()) {
    char c = src[i];
    int c0 = col;
    if (c == '\n') {
      newline(c0);
      ++i;
      ++line;
      col = 1;
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\r') {
      ++i;
      ++col;
      continue;
    }
    if (c == '#') {
      while (i < src.size() && src[i] != '\n') ++i;
      continue;
    }
    if (c == ';') {
      newline(c0);
      ++i;
      ++col;
      continue;
    }
    if (is_ident_start(c)) {
      std::size_t j = i;
      while (j < src.size() && is_ident_char(src[j])) ++j;
      push(Tok::Ident, std::string(src.substr(i, j - i)), c0);
      col += static_cast<int>(j - i);
      i = j;
      continue;
    }
    if (is_digit(c) || (c == '.' && i + 1 < src.size() && is_digit(src[i + 1]))) {
      std::size_t j = i;
      while (j < src.size() && is_digit(src[j])) ++j;
      if (j + 1 < src.size() && src[j] == '.' && is_digit(src[j + 1])) {
        ++j;
        while (j < src.size() && is_digit(src[j])) ++j;
      }
      if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < src.size() && (src[k] == '+' || src[k] == '-')) ++k;
        if (k < src.size() && is_digit(src[k])) {
          while (k < src.size() && is_digit(src[k])) ++k;
          j = k;
        }
      }
      std::string text(src.substr(i, j - i));
      double v = 0.0;
      auto res = std::from_chars(text.data(), text.data() + text.size(), v);
      if (res.ec != std::errc() || !std::isfinite(v)) throw SyntaxError(line, c0, "finite number");
      out.push_back({Tok::Number, text, v, line, c0});
      col += static_cast<int>(j - i);
      i = j;
      continue;
    }
    if (c == '"') {
      std::string s;
      std::size_t j = i + 1;
      while (true) {
        if (j >= src.size() || src[j] == '\n') throw SyntaxError(line, c0, "closing '\"'");
        if (src[j] == '"') break;
        if (src[j] == '\\' && j + 1 < src.size() && (src[j + 1] == '"' || src[j + 1] == '\\')) ++j;
        s.push_back(src[j++]);
      }
      push(Tok::String, std::move(s), c0);
      col += static_cast<int>(j + 1 - i);
      i = j + 1;
      continue;
    }
    std::string_view two = src.substr(i, 2);
    if (two == "<=" || two == ">=" || two == "==" || two == "..") {
      push(Tok::Op, std::string(two), c0);
      i += 2;
      col += 2;
      continue;
    }
    if (std::string_view("+-*/^()[],:=<>").find(c) != std::string_view::npos) {
      if (c == '(' || c == '[') ++depth;
      if ((c == ')' || c == ']') && depth > 0) --depth;
      push(Tok::Op, std::string(1, c), c0);
      ++i;
      ++col;
      continue;
    }
    throw SyntaxError(line, c0, "valid character");
  }
  out.push_back({Tok::End, "", 0.0, line, col});
  return out;
}

class Parser {
 public:
  explicit Parser(std::string_view src) : toks_(lex(src)) {}

  Problem run() {
    // Declarations first so statements may reference names declared later.
    walk(true);
    walk(false);
    if (!have_objective_) {
      const Token& t = toks_.back();
      throw SyntaxError(t.line, t.col, "objective ('minimize', 'maximize' or 'optimize')");
    }
    for (const auto& v : pb_.variables) v.validate();
    return std::move(pb_);
  }

 private:
  // ---------------------------------------------------------------- tokens
  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  bool at_op(std::string_view op, std::size_t ahead = 0) const {
    return peek(ahead).kind == Tok::Op && peek(ahead).text == op;
  }
  bool at_word(std::string_view w, std::size_t ahead = 0) const {
    return peek(ahead).kind == Tok::Ident && peek(ahead).text == w;
  }
  bool at_line_end() const { return peek().kind == Tok::Newline || peek().kind == Tok::End; }
  [[noreturn]] void fail(std::string expected) const {
    throw SyntaxError(peek().line, peek().col, std::move(expected));
  }
  const Token& next() {
    const Token& t = peek();
    if (pos_ < toks_.size() - 1) ++pos_;
    return t;
  }
  void expect_op(std::string_view op) {
    if (!at_op(op)) fail("'" + std::string(op) + "'");
    next();
  }
  void expect_word(std::string_view w) {
    if (!at_word(w)) fail("'" + std::string(w) + "'");
    next();
  }
  std::string expect_name(const char* what) {
    if (peek().kind != Tok::Ident || kKeywords.count(peek().text)) fail(what);
    return next().text;
  }
  void skip_line() {
    while (!at_line_end()) next();
  }
  void end_statement() {
    if (!at_line_end()) fail("end of line");
  }

  static bool is_section_word(const Token& t) {
    static const std::set<std::string, std::less<>> w = {"problem", "param", "var", "minimize",
                                                        "maximize", "optimize", "subject"};
    return t.kind == Tok::Ident && w.count(t.text);
  }

  // ------------------------------------------------------------- structure
  void walk(bool decl_pass) {
    pos_ = 0;
    bool in_constraints = false;
    while (true) {
      while (peek().kind == Tok::Newline) next();
      if (peek().kind == Tok::End) return;
      const Token& t = peek();
      if (is_section_word(t)) in_constraints = false;

      if (t.kind == Tok::Ident && (t.text == "var" || t.text == "param")) {
        if (decl_pass) {
          next();
          t.text == "var" ? var_decl() : param_decl();
          end_statement();
        } else {
          skip_line();
        }
      } else if (decl_pass) {
        if (at_word("problem")) {
          next();
          if (peek().kind == Tok::String)
            pb_.name = next().text;
          else
            pb_.name = expect_name("problem name");
          end_statement();
        } else {
          skip_line();
        }
      } else if (at_word("problem")) {
        skip_line();
      } else if (at_word("minimize") || at_word("maximize") || at_word("optimize")) {
        if (have_objective_) throw DuplicateDeclaration("objective");
        pb_.direction = t.text == "maximize" ? Direction::Maximize : Direction::Minimize;
        next();
        if (at_line_end() || at_word("subject")) fail("objective expression");
        pb_.objective = expr();
        have_objective_ = true;
        if (at_word("subject")) continue;
        end_statement();
      } else if (at_word("subject")) {
        next();
        expect_word("to");
        in_constraints = true;
      } else if (in_constraints) {
        constraint();
        end_statement();
      } else {
        fail("statement");
      }
    }
  }

  void declare(const std::string& name) {
    if (!declared_.insert(name).second) throw DuplicateDeclaration(name);
  }

  std::vector<int> dims() {
    std::vector<int> shape;
    expect_op("[");
    while (true) {
      auto v = int_expr();
      if (v < 1 || v > kMaxExpansion) fail("array length between 1 and " + std::to_string(kMaxExpansion));
      shape.push_back(static_cast<int>(v));
      if (at_op(",")) {
        next();
        continue;
      }
      break;
    }
    expect_op("]");
    std::int64_t total = 1;
    for (int e : shape) {
      total *= e;
      if (total > kMaxExpansion) fail("smaller array");
    }
    return shape;
  }

  void var_decl() {
    VarDecl d;
    d.name = expect_name("variable name");
    declare(d.name);
    if (at_op("[")) d.shape = dims();
    if (at_word("continuous") || at_word("integer") || at_word("binary")) {
      auto k = next().text;
      d.kind = k == "integer" ? VarKind::Integer : k == "binary" ? VarKind::Binary : VarKind::Continuous;
    }
    if (d.kind == VarKind::Binary) {
      d.lb = 0.0;
      d.ub = 1.0;
    }
    if (at_word("in")) {
      next();
      expect_op("[");
      d.lb = bound();
      expect_op(",");
      d.ub = bound();
      expect_op("]");
    }
    pb_.variables.push_back(std::move(d));
  }

  double bound() {
    bool negative = false;
    if (at_op("-") && at_word("inf", 1)) {
      next();
      negative = true;
    }
    if (at_word("inf")) {
      next();
      return negative ? -kInf : kInf;
    }
    return const_expr();
  }

  void param_decl() {
    ParamDecl p;
    p.name = expect_name("parameter name");
    declare(p.name);
    std::optional<std::vector<int>> declared_shape;
    if (at_op("[")) declared_shape = dims();
    if (at_op("=")) {
      next();
      std::vector<double> values;
      if (at_op("[")) {
        p.shape = array_value(values, 0);
      } else {
        values.push_back(const_expr());
      }
      if (declared_shape && *declared_shape != p.shape) fail("value matching the declared shape");
      p.values = std::move(values);
    } else if (declared_shape) {
      p.shape = *declared_shape;
    }
    pb_.parameters.push_back(std::move(p));
  }

  std::vector<int> array_value(std::vector<double>& values, std::size_t depth) {
    if (depth > 8) fail("at most 8 array dimensions");
    expect_op("[");
    std::vector<int> inner;
    int count = 0;
    while (true) {
      if (at_op("[")) {
        auto s = array_value(values, depth + 1);
        if (count > 0 && s != inner) fail("rectangular array");
        if (count == 0 && !inner.empty()) fail("rectangular array");
        inner = std::move(s);
        if (inner.empty()) fail("rectangular array");
      } else {
        if (!inner.empty()) fail("'['");
        values.push_back(const_expr());
      }
      ++count;
      if (values.size() > static_cast<std::size_t>(kMaxExpansion)) fail("smaller array");
      if (!at_op(",")) break;
      next();
    }
    expect_op("]");
    std::vector<int> shape{count};
    shape.insert(shape.end(), inner.begin(), inner.end());
    return shape;
  }

  /// Expression with no variables, evaluated with the parameters known so far.
  double const_expr() {
    const Token& at = peek();
    Expr e = expr();
    return fold(e, at);
  }

  double fold(const Expr& e, const Token& at) const {
    if (!free_vars(e).empty()) throw SyntaxError(at.line, at.col, "constant expression");
    try {
      return evaluate(e, pb_.param_assignment());
    } catch (const UnboundSymbol& u) {
      throw SyntaxError(at.line, at.col, "constant expression ('" + u.name() + "' has no value)");
    } catch (const DomainError&) {
      throw SyntaxError(at.line, at.col, "finite constant expression");
    }
  }

  // ----------------------------------------------------------- constraints
  struct Loop {
    std::string name;
    std::int64_t lo, hi;
  };

  void constraint() {
    std::string group;
    if (peek().kind == Tok::Ident && at_op(":", 1)) {
      group = expect_name("constraint label");
      next();
    } else {
      group = "c" + std::to_string(++auto_label_);
    }
    std::size_t start = pos_;

    // Locate an optional "for" clause at the end of the line.
    std::size_t scan = pos_;
    while (toks_[scan].kind != Tok::Newline && toks_[scan].kind != Tok::End &&
           !(toks_[scan].kind == Tok::Ident && toks_[scan].text == "for"))
      ++scan;
    std::vector<Loop> loops;
    std::size_t after = scan;
    if (toks_[scan].kind == Tok::Ident) {
      pos_ = scan + 1;
      while (true) {
        Loop l;
        l.name = expect_name("loop index");
        expect_word("in");
        l.lo = int_expr();
        expect_op("..");
        l.hi = int_expr();
        loops.push_back(std::move(l));
        if (!at_op(",")) break;
        next();
      }
      after = pos_;
    }
    std::int64_t rows = 1;
    for (const auto& l : loops) {
      rows *= std::max<std::int64_t>(0, l.hi - l.lo + 1);
      if (rows > kMaxExpansion) fail("smaller index range");
    }

    std::vector<std::int64_t> idx;
    for (const auto& l : loops) idx.push_back(l.lo);
    for (std::int64_t r = 0; r < rows; ++r) {
      for (std::size_t k = 0; k < loops.size(); ++k) env_.push_back({loops[k].name, idx[k]});
      pos_ = start;
      relation(group, scan);
      env_.resize(env_.size() - loops.size());
      for (std::size_t k = loops.size(); k-- > 0;) {
        if (++idx[k] <= loops[k].hi) break;
        idx[k] = loops[k].lo;
      }
    }
    pos_ = after;
  }

  void relation(const std::string& group, std::size_t stop) {
    Expr lhs = expr();
    if (at_op("<") || at_op(">")) fail("'<=' or '>=' (strict inequalities are not allowed)");
    std::string op;
    if (at_op("<=") || at_op(">=") || at_op("==")) {
      op = next().text;
    } else {
      fail("'<=', '>=' or '=='");
    }
    Expr rhs = expr();
    if (pos_ != stop) fail("end of constraint");
    if (op == ">=") std::swap(lhs, rhs);
    Constraint c{difference(lhs, rhs), group};
    (op == "==" ? pb_.eq : pb_.ineq).push_back(std::move(c));
  }

  static Expr negated(const Expr& e) {
    if (e.is_const()) return Expr::constant(-e.value());
    return Expr::neg(e);
  }

  /// a - b with a literal zero on either side dropped.
  static Expr difference(const Expr& a, const Expr& b) {
    if (b.is_const(0.0)) return a;
    if (a.is_const(0.0)) return negated(b);
    std::vector<Expr> terms;
    if (a.kind() == NodeKind::Add)
      terms.assign(a.children().begin(), a.children().end());
    else
      terms.push_back(a);
    terms.push_back(negated(b));
    return Expr::add(std::move(terms));
  }

  // ----------------------------------------------------------- expressions
  struct DepthGuard {
    Parser& p;
    explicit DepthGuard(Parser& q) : p(q) {
      if (++p.depth_ > kMaxDepth) p.fail("shallower nesting");
    }
    ~DepthGuard() { --p.depth_; }
  };

  Expr expr() {
    DepthGuard g(*this);
    std::vector<Expr> terms{term()};
    while (at_op("+") || at_op("-")) {
      bool minus = next().text == "-";
      Expr t = term();
      terms.push_back(minus ? Expr::neg(std::move(t)) : std::move(t));
    }
    return Expr::add(std::move(terms));
  }

  Expr term() {
    std::vector<Expr> factors{unary()};
    while (at_op("*") || at_op("/")) {
      bool div = next().text == "/";
      const Token& at = peek();
      Expr f = unary();
      if (div) {
        if (f.is_const(0.0)) throw SyntaxError(at.line, at.col, "nonzero denominator");
        Expr num = Expr::mul(std::move(factors));
        factors = {Expr::div(std::move(num), std::move(f))};
      } else {
        factors.push_back(std::move(f));
      }
    }
    return Expr::mul(std::move(factors));
  }

  Expr unary() {
    DepthGuard g(*this);
    if (at_op("-")) {
      next();
      if (peek().kind == Tok::Number && !at_op("^", 1)) return Expr::constant(-next().num);
      return Expr::neg(unary());
    }
    return power();
  }

  Expr power() {
    Expr base = atom();
    if (at_op("^")) {
      next();
      const Token& at = peek();
      Expr e = unary();
      return Expr::pow(std::move(base), fold(e, at));
    }
    return base;
  }

  Expr atom() {
    DepthGuard g(*this);
    const Token& t = peek();
    if (t.kind == Tok::Number) {
      next();
      return Expr::constant(t.num);
    }
    if (at_op("(")) {
      next();
      Expr e = expr();
      expect_op(")");
      return e;
    }
    if (t.kind != Tok::Ident) fail("expression");
    static const std::map<std::string, Expr (*)(Expr), std::less<>> funcs = {
        {"log", &Expr::log}, {"log2", &Expr::log2}, {"exp", &Expr::exp},
        {"abs", &Expr::abs}, {"sqrt", &Expr::sqrt}};
    if (auto f = funcs.find(t.text); f != funcs.end()) {
      next();
      expect_op("(");
      Expr e = expr();
      expect_op(")");
      return f->second(std::move(e));
    }
    if (t.text == "sum") return sum();
    if (kKeywords.count(t.text)) fail("expression");
    return symbol();
  }

  Expr sum() {
    next();
    expect_op("(");
    std::size_t body = pos_;
    int depth = 0;
    while (true) {
      const Token& t = peek();
      if (t.kind == Tok::End) fail("',' after the summand");
      if (t.kind == Tok::Op) {
        if (t.text == "(" || t.text == "[") ++depth;
        if (t.text == ")" || t.text == "]") {
          if (depth == 0) fail("',' after the summand");
          --depth;
        }
        if (t.text == "," && depth == 0) break;
      }
      next();
    }
    std::size_t body_end = pos_;
    next();
    std::string index = expect_name("summation index");
    expect_op(",");
    auto lo = int_expr();
    expect_op(",");
    auto hi = int_expr();
    expect_op(")");
    std::size_t after = pos_;
    if (hi - lo + 1 > kMaxExpansion) fail("smaller summation range");
    expanded_ += std::max<std::int64_t>(0, hi - lo + 1);
    if (expanded_ > kMaxExpansion) fail("smaller summation ranges");

    std::vector<Expr> terms;
    for (auto i = lo; i <= hi; ++i) {
      env_.push_back({index, i});
      pos_ = body;
      terms.push_back(expr());
      if (pos_ != body_end) fail("',' after the summand");
      env_.pop_back();
    }
    pos_ = after;
    return Expr::add(std::move(terms));
  }

  std::optional<std::int64_t> loop_value(std::string_view name) const {
    for (auto it = env_.rbegin(); it != env_.rend(); ++it)
      if (it->first == name) return it->second;
    return std::nullopt;
  }

  Expr symbol() {
    const Token& t = next();
    if (auto v = loop_value(t.text)) return Expr::constant(static_cast<double>(*v));

    const VarDecl* var = pb_.find_family(t.text);
    const ParamDecl* par = var ? nullptr : pb_.find_param(t.text);
    if (!var && !par) throw UndeclaredSymbol(t.text);
    const auto& shape = var ? var->shape : par->shape;

    std::string name = t.text;
    if (at_op("[")) {
      next();
      std::vector<std::int64_t> idx;
      while (true) {
        idx.push_back(int_expr());
        if (!at_op(",")) break;
        next();
      }
      expect_op("]");
      name += "[";
      for (std::size_t k = 0; k < idx.size(); ++k) {
        if (k) name += ",";
        name += std::to_string(idx[k]);
      }
      name += "]";
      bool ok = idx.size() == shape.size();
      for (std::size_t k = 0; ok && k < idx.size(); ++k) ok = idx[k] >= 1 && idx[k] <= shape[k];
      if (!ok) throw UndeclaredSymbol(name);
    } else if (!shape.empty()) {
      fail("index for '" + t.text + "'");
    }
    return var ? Expr::variable(std::move(name)) : Expr::parameter(std::move(name));
  }

  // ------------------------------------------------------- integer indices
  std::int64_t int_expr() {
    DepthGuard g(*this);
    auto v = int_term();
    while (at_op("+") || at_op("-")) {
      bool minus = next().text == "-";
      auto r = int_term();
      v = checked(minus ? static_cast<long double>(v) - r : static_cast<long double>(v) + r);
    }
    return v;
  }

  std::int64_t int_term() {
    auto v = int_atom();
    while (at_op("*")) {
      next();
      v = checked(static_cast<long double>(v) * int_atom());
    }
    return v;
  }

  std::int64_t int_atom() {
    DepthGuard g(*this);
    const Token& t = peek();
    if (at_op("-")) {
      next();
      return -int_atom();
    }
    if (at_op("(")) {
      next();
      auto v = int_expr();
      expect_op(")");
      return v;
    }
    if (t.kind == Tok::Number) {
      if (t.num != std::floor(t.num) || std::fabs(t.num) > 1e15) fail("integer");
      next();
      return static_cast<std::int64_t>(t.num);
    }
    if (t.kind == Tok::Ident) {
      if (auto v = loop_value(t.text)) {
        next();
        return *v;
      }
      if (auto p = pb_.param_value(t.text); p && *p == std::floor(*p) && std::fabs(*p) <= 1e15) {
        next();
        return static_cast<std::int64_t>(*p);
      }
    }
    fail("integer index expression");
  }

  std::int64_t checked(long double v) const {
    if (std::fabs(v) > 1e15) fail("smaller integer");
    return static_cast<std::int64_t>(v);
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::size_t depth_ = 0;
  std::int64_t expanded_ = 0;
  Problem pb_;
  std::set<std::string, std::less<>> declared_;
  std::vector<std::pair<std::string, std::int64_t>> env_;
  bool have_objective_ = false;
  int auto_label_ = 0;
};

bool plain_ident(std::string_view s) {
  if (s.empty() || !is_ident_start(s[0]) || kKeywords.count(s)) return false;
  for (char c : s)
    if (!is_ident_char(c)) return false;
  return true;
}

std::string bound_text(double v) {
  if (v == kInf) return "inf";
  if (v == -kInf) return "-inf";
  return format_number(v);
}

void emit_array(const std::vector<double>& v, const std::vector<int>& shape, std::size_t dim,
                std::size_t& at, std::string& out) {
  out += '[';
  for (int k = 0; k < shape[dim]; ++k) {
    if (k) out += ", ";
    if (dim + 1 < shape.size())
      emit_array(v, shape, dim + 1, at, out);
    else
      out += format_number(v[at++]);
  }
  out += ']';
}

std::string dims_text(const std::vector<int>& shape) {
  if (shape.empty()) return "";
  std::string s = "[";
  for (std::size_t k = 0; k < shape.size(); ++k) {
    if (k) s += ",";
    s += std::to_string(shape[k]);
  }
  return s + "]";
}

}  // namespace

Problem parse_problem(std::string_view text) { return Parser(text).run(); }

std::string emit_dsl(const Problem& pb) {
  std::string out = "problem ";
  if (plain_ident(pb.name)) {
    out += pb.name;
  } else {
    out += '"';
    for (char c : pb.name) {
      if (c == '"' || c == '\\') out += '\\';
      out += c;
    }
    out += '"';
  }
  out += "\n\n";
  for (const auto& p : pb.parameters) {
    out += "param " + p.name;
    if (!p.values) {
      out += dims_text(p.shape);
    } else if (p.shape.empty()) {
      out += " = " + format_number(p.values->front());
    } else {
      out += " = ";
      std::size_t at = 0;
      emit_array(*p.values, p.shape, 0, at, out);
    }
    out += '\n';
  }
  for (const auto& v : pb.variables) {
    out += "var " + v.name + dims_text(v.shape) + " " + std::string(to_string(v.kind));
    out += " in [" + bound_text(v.lb) + ", " + bound_text(v.ub) + "]\n";
  }
  out += "\n";
  out += std::string(to_string(pb.direction)) + " " + to_string(pb.objective) + "\n";
  if (!pb.ineq.empty() || !pb.eq.empty()) {
    out += "subject to\n";
    for (const auto& c : pb.ineq) out += "  " + c.group + ": " + to_string(c.expr) + " <= 0\n";
    for (const auto& c : pb.eq) out += "  " + c.group + ": " + to_string(c.expr) + " == 0\n";
  }
  return out;
}

}  // namespace ncx
