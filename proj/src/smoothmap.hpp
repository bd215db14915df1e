#pragma once
// Differentiable maps R^n -> R^m with two backings:
//
//  * expression-backed: components are Expr trees, derivatives come from
//    forward-mode jets and are exact to roundoff;
//  * callable-backed: only values are available, derivatives use
//    Richardson-extrapolated central differences (good to ~1e-10 for smooth
//    inputs of order one).
//
// ScalarField is the m = 1 convenience wrapper used for potentials and time
// rescalings.

#include <functional>
#include <span>
#include <vector>

#include "expr.hpp"
#include "linalg.hpp"

namespace nst {

class SmoothMap {
 public:
  using Fn = std::function<Vec(std::span<const double>)>;

  SmoothMap() = default;

  static SmoothMap identity(int dim);
  // n_in fixes the arity; components may use any subset of the variables.
  static SmoothMap from_expressions(std::vector<Expr> components, int n_in);
  static SmoothMap from_callable(int n_in, int n_out, Fn fn, double fd_step = 1e-3);

  bool valid() const { return n_in_ > 0; }
  int n_in() const { return n_in_; }
  int n_out() const { return n_out_; }
  // True when derivatives are exact (expression backing).
  bool exact() const { return exact_; }

  Vec operator()(std::span<const double> x) const;
  // jac(c, i) = d comp_c / d x_i
  Mat jacobian(std::span<const double> x) const;
  // hess(c, i, j) = d^2 comp_c / (d x_i d x_j)
  Tensor3 hessian(std::span<const double> x) const;
  // Value, gradient and Hessian of every component in one call.
  std::vector<Jet2> jets(std::span<const double> x) const;

  // Component trees when expression-backed, nullptr otherwise.
  const std::vector<Expr>* expressions() const;

  // (*this) o inner. Exact (by substitution) when both maps are
  // expression-backed; otherwise a callable composition.
  SmoothMap compose(const SmoothMap& inner) const;

 private:
  int n_in_ = 0, n_out_ = 0;
  bool exact_ = false;
  std::vector<Expr> exprs_;
  Fn fn_;
  double fd_step_ = 1e-3;
};

class ScalarField {
 public:
  ScalarField() = default;

  static ScalarField from_expression(Expr e, int n_in);
  static ScalarField from_callable(int n_in, std::function<double(std::span<const double>)> fn,
                                   double fd_step = 1e-3);
  static ScalarField zero(int n_in);

  bool valid() const { return m_.valid(); }
  int n_in() const { return m_.n_in(); }
  bool exact() const { return m_.exact(); }

  double operator()(std::span<const double> x) const;
  Vec gradient(std::span<const double> x) const;
  Mat hessian(std::span<const double> x) const;
  Jet2 jet(std::span<const double> x) const { return m_.jets(x)[0]; }

  // The backing tree when expression-backed, nullptr otherwise.
  const Expr* expression() const;

 private:
  SmoothMap m_;
};

}  // namespace nst
