#pragma once
// Expression trees for user-declared scalar fields.
//
// Grammar (parse_expression):
//   expr    := term (('+'|'-') term)*
//   term    := factor (('*'|'/') factor)*
//   factor  := unary ('^' factor)?            right-associative
//   unary   := ('+'|'-') unary | primary
//   primary := number | ident | ident '(' expr ')' | '(' expr ')'
//
// Identifiers are either declared variable names (e.g. Q1..Qd, q1..qd) or the
// function set exp, log, sin, cos, sqrt. Trees are immutable and shared;
// smart constructors fold constants so symbolic derivatives stay small.

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "jets.hpp"

namespace nst {

enum class ExOp { kConst, kVar, kAdd, kSub, kMul, kDiv, kPow, kNeg, kFun };
enum class ExFun { kExp, kLog, kSin, kCos, kSqrt };

struct ExNode;
using ExNodePtr = std::shared_ptr<const ExNode>;

struct ExNode {
  ExOp op;
  double value = 0.0;       // kConst
  int var = -1;             // kVar
  std::string var_name;     // kVar (display)
  ExFun fun = ExFun::kExp;  // kFun
  ExNodePtr a, b;
};

class ExprError : public std::runtime_error {
 public:
  explicit ExprError(const std::string& what) : std::runtime_error(what) {}
};

class Expr {
 public:
  Expr();  // the constant 0
  static Expr constant(double c);
  static Expr variable(int index, std::string name = {});
  static Expr apply(ExFun fun, const Expr& a);
  static Expr pow(const Expr& base, const Expr& exponent);

  friend Expr operator+(const Expr&, const Expr&);
  friend Expr operator-(const Expr&, const Expr&);
  friend Expr operator*(const Expr&, const Expr&);
  friend Expr operator/(const Expr&, const Expr&);
  Expr operator-() const;

  double operator()(std::span<const double> x) const;
  Dual eval_dual(std::span<const double> x) const;
  Jet2 eval_jet(std::span<const double> x) const;

  // d(this)/d(x_var), symbolic with constant folding.
  Expr derivative(int var) const;
  // Replace variable i by repl[i] (composition). Variables with index beyond
  // repl.size() are rejected.
  Expr substitute(std::span<const Expr> repl) const;

  bool is_constant(double* value = nullptr) const;
  // 1 + largest variable index appearing in the tree (0 for constants).
  int min_arity() const;
  std::string str() const;

  const ExNodePtr& node() const { return n_; }

 private:
  explicit Expr(ExNodePtr n) : n_(std::move(n)) {}
  ExNodePtr n_;
};

// Parse with a fixed variable-name list; names are matched exactly.
// Throws ExprError with a position-annotated message.
Expr parse_expression(std::string_view text, std::span<const std::string> variables);

// Convenience: variables named <prefix>1 .. <prefix><dim>.
std::vector<std::string> coordinate_names(const std::string& prefix, int dim);

}  // namespace nst
