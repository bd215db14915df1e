#include "expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <sstream>

namespace nst {

namespace {

ExNodePtr make_const(double c) {
  auto n = std::make_shared<ExNode>();
  n->op = ExOp::kConst;
  n->value = c;
  return n;
}

ExNodePtr make_var(int index, std::string name) {
  auto n = std::make_shared<ExNode>();
  n->op = ExOp::kVar;
  n->var = index;
  n->var_name = std::move(name);
  return n;
}

ExNodePtr make_node(ExOp op, ExNodePtr a, ExNodePtr b = nullptr) {
  auto n = std::make_shared<ExNode>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

bool const_val(const ExNodePtr& n, double* v) {
  if (n->op != ExOp::kConst) return false;
  if (v) *v = n->value;
  return true;
}

double fun_eval(ExFun f, double x) {
  switch (f) {
    case ExFun::kExp: return std::exp(x);
    case ExFun::kLog: return std::log(x);
    case ExFun::kSin: return std::sin(x);
    case ExFun::kCos: return std::cos(x);
    case ExFun::kSqrt: return std::sqrt(x);
  }
  return 0.0;
}

const char* fun_name(ExFun f) {
  switch (f) {
    case ExFun::kExp: return "exp";
    case ExFun::kLog: return "log";
    case ExFun::kSin: return "sin";
    case ExFun::kCos: return "cos";
    case ExFun::kSqrt: return "sqrt";
  }
  return "?";
}

}  // namespace

Expr::Expr() : n_(make_const(0.0)) {}

Expr Expr::constant(double c) { return Expr(make_const(c)); }

Expr Expr::variable(int index, std::string name) {
  if (index < 0) throw ExprError("variable index must be non-negative");
  if (name.empty()) name = "x" + std::to_string(index + 1);
  return Expr(make_var(index, std::move(name)));
}

// ---- smart constructors with constant folding ----

Expr operator+(const Expr& a, const Expr& b) {
  double ca, cb;
  const bool fa = const_val(a.n_, &ca), fb = const_val(b.n_, &cb);
  if (fa && fb) return Expr::constant(ca + cb);
  if (fa && ca == 0.0) return b;
  if (fb && cb == 0.0) return a;
  return Expr(make_node(ExOp::kAdd, a.n_, b.n_));
}

Expr operator-(const Expr& a, const Expr& b) {
  double ca, cb;
  const bool fa = const_val(a.n_, &ca), fb = const_val(b.n_, &cb);
  if (fa && fb) return Expr::constant(ca - cb);
  if (fb && cb == 0.0) return a;
  if (fa && ca == 0.0) return -b;
  if (a.n_ == b.n_) return Expr::constant(0.0);
  return Expr(make_node(ExOp::kSub, a.n_, b.n_));
}

Expr Expr::operator-() const {
  double c;
  if (const_val(n_, &c)) return constant(-c);
  if (n_->op == ExOp::kNeg) return Expr(n_->a);
  return Expr(make_node(ExOp::kNeg, n_));
}

Expr operator*(const Expr& a, const Expr& b) {
  double ca, cb;
  const bool fa = const_val(a.n_, &ca), fb = const_val(b.n_, &cb);
  if (fa && fb) return Expr::constant(ca * cb);
  if (fa) {
    if (ca == 0.0) return Expr::constant(0.0);
    if (ca == 1.0) return b;
    if (ca == -1.0) return -b;
  }
  if (fb) {
    if (cb == 0.0) return Expr::constant(0.0);
    if (cb == 1.0) return a;
    if (cb == -1.0) return -a;
  }
  return Expr(make_node(ExOp::kMul, a.n_, b.n_));
}

Expr operator/(const Expr& a, const Expr& b) {
  double ca, cb;
  const bool fa = const_val(a.n_, &ca), fb = const_val(b.n_, &cb);
  if (fb) {
    if (cb == 0.0) throw ExprError("division by constant zero");
    if (fa) return Expr::constant(ca / cb);
    if (cb == 1.0) return a;
  }
  if (fa && ca == 0.0) return Expr::constant(0.0);
  return Expr(make_node(ExOp::kDiv, a.n_, b.n_));
}

Expr Expr::pow(const Expr& base, const Expr& exponent) {
  double cb, ce;
  const bool fb = const_val(base.n_, &cb), fe = const_val(exponent.n_, &ce);
  if (fe) {
    if (ce == 0.0) return constant(1.0);
    if (ce == 1.0) return base;
    if (fb) return constant(std::pow(cb, ce));
  }
  return Expr(make_node(ExOp::kPow, base.n_, exponent.n_));
}

Expr Expr::apply(ExFun fun, const Expr& a) {
  double c;
  if (const_val(a.n_, &c)) return constant(fun_eval(fun, c));
  auto n = std::make_shared<ExNode>();
  n->op = ExOp::kFun;
  n->fun = fun;
  n->a = a.n_;
  return Expr(std::move(n));
}

// ---- evaluation ----

namespace {

// Bring the scalar overloads into scope so eval_node<double> resolves; the
// Dual/Jet2 overloads are found through argument-dependent lookup.
using std::cos;
using std::exp;
using std::log;
using std::pow;
using std::sin;
using std::sqrt;

template <class T, class Ctx>
T eval_node(const ExNode* n, const Ctx& ctx) {
  switch (n->op) {
    case ExOp::kConst: return ctx.constant(n->value);
    case ExOp::kVar: return ctx.variable(n->var);
    case ExOp::kAdd: return eval_node<T>(n->a.get(), ctx) + eval_node<T>(n->b.get(), ctx);
    case ExOp::kSub: return eval_node<T>(n->a.get(), ctx) - eval_node<T>(n->b.get(), ctx);
    case ExOp::kMul: return eval_node<T>(n->a.get(), ctx) * eval_node<T>(n->b.get(), ctx);
    case ExOp::kDiv: return eval_node<T>(n->a.get(), ctx) / eval_node<T>(n->b.get(), ctx);
    case ExOp::kPow: {
      double ce;
      if (const_val(n->b, &ce)) return pow(eval_node<T>(n->a.get(), ctx), ce);
      return pow(eval_node<T>(n->a.get(), ctx), eval_node<T>(n->b.get(), ctx));
    }
    case ExOp::kNeg: return -eval_node<T>(n->a.get(), ctx);
    case ExOp::kFun: {
      T x = eval_node<T>(n->a.get(), ctx);
      switch (n->fun) {
        case ExFun::kExp: return exp(x);
        case ExFun::kLog: return log(x);
        case ExFun::kSin: return sin(x);
        case ExFun::kCos: return cos(x);
        case ExFun::kSqrt: return sqrt(x);
      }
      throw ExprError("unknown function");
    }
  }
  throw ExprError("corrupt expression node");
}

struct ScalarCtx {
  std::span<const double> x;
  double constant(double c) const { return c; }
  double variable(int i) const {
    if (i < 0 || static_cast<std::size_t>(i) >= x.size())
      throw ExprError("expression references variable beyond point arity");
    return x[static_cast<std::size_t>(i)];
  }
};

struct DualCtx {
  std::span<const double> x;
  Dual constant(double c) const { return Dual::constant(c, x.size()); }
  Dual variable(int i) const {
    if (i < 0 || static_cast<std::size_t>(i) >= x.size())
      throw ExprError("expression references variable beyond point arity");
    return Dual::variable(x[static_cast<std::size_t>(i)], static_cast<std::size_t>(i), x.size());
  }
};

struct JetCtx {
  std::span<const double> x;
  Jet2 constant(double c) const { return Jet2::constant(c, x.size()); }
  Jet2 variable(int i) const {
    if (i < 0 || static_cast<std::size_t>(i) >= x.size())
      throw ExprError("expression references variable beyond point arity");
    return Jet2::variable(x[static_cast<std::size_t>(i)], static_cast<std::size_t>(i), x.size());
  }
};

}  // namespace

double Expr::operator()(std::span<const double> x) const {
  return eval_node<double>(n_.get(), ScalarCtx{x});
}

Dual Expr::eval_dual(std::span<const double> x) const {
  return eval_node<Dual>(n_.get(), DualCtx{x});
}

Jet2 Expr::eval_jet(std::span<const double> x) const {
  return eval_node<Jet2>(n_.get(), JetCtx{x});
}

// ---- symbolic derivative ----

Expr Expr::derivative(int var) const {
  const ExNode* n = n_.get();
  switch (n->op) {
    case ExOp::kConst: return constant(0.0);
    case ExOp::kVar: return constant(n->var == var ? 1.0 : 0.0);
    case ExOp::kAdd: return Expr(n->a).derivative(var) + Expr(n->b).derivative(var);
    case ExOp::kSub: return Expr(n->a).derivative(var) - Expr(n->b).derivative(var);
    case ExOp::kMul:
      return Expr(n->a).derivative(var) * Expr(n->b) + Expr(n->a) * Expr(n->b).derivative(var);
    case ExOp::kDiv: {
      Expr a(n->a), b(n->b);
      return (a.derivative(var) * b - a * b.derivative(var)) / (b * b);
    }
    case ExOp::kPow: {
      Expr a(n->a), b(n->b);
      double ce;
      if (b.is_constant(&ce))
        return constant(ce) * pow(a, constant(ce - 1.0)) * a.derivative(var);
      // d(a^b) = a^b (b' log a + b a'/a)
      return pow(a, b) * (b.derivative(var) * apply(ExFun::kLog, a) + b * a.derivative(var) / a);
    }
    case ExOp::kNeg: return -Expr(n->a).derivative(var);
    case ExOp::kFun: {
      Expr a(n->a);
      Expr da = a.derivative(var);
      switch (n->fun) {
        case ExFun::kExp: return apply(ExFun::kExp, a) * da;
        case ExFun::kLog: return da / a;
        case ExFun::kSin: return apply(ExFun::kCos, a) * da;
        case ExFun::kCos: return -(apply(ExFun::kSin, a) * da);
        case ExFun::kSqrt: return da / (constant(2.0) * apply(ExFun::kSqrt, a));
      }
      throw ExprError("unknown function");
    }
  }
  throw ExprError("corrupt expression node");
}

Expr Expr::substitute(std::span<const Expr> repl) const {
  const ExNode* n = n_.get();
  switch (n->op) {
    case ExOp::kConst: return Expr(n_);
    case ExOp::kVar:
      if (n->var < 0 || static_cast<std::size_t>(n->var) >= repl.size())
        throw ExprError("substitute: variable " + n->var_name + " has no replacement");
      return repl[static_cast<std::size_t>(n->var)];
    case ExOp::kAdd: return Expr(n->a).substitute(repl) + Expr(n->b).substitute(repl);
    case ExOp::kSub: return Expr(n->a).substitute(repl) - Expr(n->b).substitute(repl);
    case ExOp::kMul: return Expr(n->a).substitute(repl) * Expr(n->b).substitute(repl);
    case ExOp::kDiv: return Expr(n->a).substitute(repl) / Expr(n->b).substitute(repl);
    case ExOp::kPow: return pow(Expr(n->a).substitute(repl), Expr(n->b).substitute(repl));
    case ExOp::kNeg: return -Expr(n->a).substitute(repl);
    case ExOp::kFun: return apply(n->fun, Expr(n->a).substitute(repl));
  }
  throw ExprError("corrupt expression node");
}

bool Expr::is_constant(double* value) const { return const_val(n_, value); }

namespace {
int max_var_index(const ExNode* n) {
  switch (n->op) {
    case ExOp::kConst: return -1;
    case ExOp::kVar: return n->var;
    case ExOp::kNeg:
    case ExOp::kFun: return max_var_index(n->a.get());
    default: return std::max(max_var_index(n->a.get()), max_var_index(n->b.get()));
  }
}

void print_node(const ExNode* n, std::ostringstream& os, int parent_prec);

int precedence(const ExNode* n) {
  switch (n->op) {
    case ExOp::kAdd:
    case ExOp::kSub: return 1;
    case ExOp::kMul:
    case ExOp::kDiv: return 2;
    case ExOp::kNeg: return 3;
    case ExOp::kPow: return 4;
    default: return 5;
  }
}

void print_node(const ExNode* n, std::ostringstream& os, int parent_prec) {
  const int prec = precedence(n);
  const bool paren = prec < parent_prec;
  if (paren) os << '(';
  switch (n->op) {
    case ExOp::kConst: {
      if (n->value < 0.0) {
        os << '(' << n->value << ')';
      } else {
        os << n->value;
      }
      break;
    }
    case ExOp::kVar: os << n->var_name; break;
    case ExOp::kAdd:
      print_node(n->a.get(), os, prec);
      os << " + ";
      print_node(n->b.get(), os, prec);
      break;
    case ExOp::kSub:
      print_node(n->a.get(), os, prec);
      os << " - ";
      print_node(n->b.get(), os, prec + 1);
      break;
    case ExOp::kMul:
      print_node(n->a.get(), os, prec);
      os << "*";
      print_node(n->b.get(), os, prec);
      break;
    case ExOp::kDiv:
      print_node(n->a.get(), os, prec);
      os << "/";
      print_node(n->b.get(), os, prec + 1);
      break;
    case ExOp::kNeg:
      os << "-";
      print_node(n->a.get(), os, prec + 1);
      break;
    case ExOp::kPow:
      print_node(n->a.get(), os, prec + 1);
      os << "^";
      print_node(n->b.get(), os, prec);
      break;
    case ExOp::kFun:
      os << fun_name(n->fun) << '(';
      print_node(n->a.get(), os, 0);
      os << ')';
      break;
  }
  if (paren) os << ')';
}
}  // namespace

int Expr::min_arity() const { return max_var_index(n_.get()) + 1; }

std::string Expr::str() const {
  std::ostringstream os;
  print_node(n_.get(), os, 0);
  return os.str();
}

// ---- parser ----

namespace {

struct Parser {
  std::string_view text;
  std::size_t pos = 0;
  std::span<const std::string> vars;

  [[noreturn]] void fail(const std::string& msg) const {
    std::ostringstream os;
    os << "parse error at position " << pos << " in \"" << text << "\": " << msg;
    throw ExprError(os.str());
  }

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }

  bool eat(char c) {
    skip_ws();
    if (pos < text.size() && text[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos < text.size() ? text[pos] : '\0';
  }

  Expr parse() {
    Expr e = expr();
    skip_ws();
    if (pos != text.size()) fail("unexpected trailing input");
    return e;
  }

  Expr expr() {
    Expr e = term();
    for (;;) {
      if (eat('+')) {
        e = e + term();
      } else if (eat('-')) {
        e = e - term();
      } else {
        return e;
      }
    }
  }

  Expr term() {
    Expr e = factor();
    for (;;) {
      if (eat('*')) {
        e = e * factor();
      } else if (eat('/')) {
        e = e / factor();
      } else {
        return e;
      }
    }
  }

  // Unary minus binds looser than '^' (so -Q1^2 means -(Q1^2)), while the
  // exponent itself may carry a sign (2^-3). '^' is right-associative.
  Expr factor() {
    if (eat('-')) return -factor();
    if (eat('+')) return factor();
    Expr base = primary();
    if (eat('^')) return Expr::pow(base, factor());
    return base;
  }

  Expr primary() {
    skip_ws();
    if (pos >= text.size()) fail("unexpected end of input");
    const char c = text[pos];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    if (eat('(')) {
      Expr e = expr();
      if (!eat(')')) fail("expected ')'");
      return e;
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  Expr number() {
    const char* begin = text.data() + pos;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) fail("malformed number");
    pos += static_cast<std::size_t>(end - begin);
    return Expr::constant(v);
  }

  Expr identifier() {
    const std::size_t start = pos;
    while (pos < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
      ++pos;
    const std::string name(text.substr(start, pos - start));
    if (peek() == '(') {
      ExFun fun;
      if (name == "exp") {
        fun = ExFun::kExp;
      } else if (name == "log") {
        fun = ExFun::kLog;
      } else if (name == "sin") {
        fun = ExFun::kSin;
      } else if (name == "cos") {
        fun = ExFun::kCos;
      } else if (name == "sqrt") {
        fun = ExFun::kSqrt;
      } else {
        pos = start;
        fail("unknown function '" + name + "' (allowed: exp, log, sin, cos, sqrt)");
      }
      eat('(');
      Expr arg = expr();
      if (!eat(')')) fail("expected ')' after function argument");
      return Expr::apply(fun, arg);
    }
    for (std::size_t i = 0; i < vars.size(); ++i)
      if (vars[i] == name) return Expr::variable(static_cast<int>(i), name);
    pos = start;
    std::string allowed;
    for (const auto& v : vars) allowed += (allowed.empty() ? "" : ", ") + v;
    fail("unknown identifier '" + name + "' (variables: " + allowed + ")");
  }
};

}  // namespace

Expr parse_expression(std::string_view text, std::span<const std::string> variables) {
  Parser p{text, 0, variables};
  return p.parse();
}

std::vector<std::string> coordinate_names(const std::string& prefix, int dim) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(dim));
  for (int i = 1; i <= dim; ++i) names.push_back(prefix + std::to_string(i));
  return names;
}

}  // namespace nst
