#include "smoothmap.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace nst {

namespace {

double rel_step(double base, double x) { return base * std::max(1.0, std::abs(x)); }

}  // namespace

SmoothMap SmoothMap::identity(int dim) {
  std::vector<Expr> comps;
  comps.reserve(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i) comps.push_back(Expr::variable(i));
  return from_expressions(std::move(comps), dim);
}

SmoothMap SmoothMap::from_expressions(std::vector<Expr> components, int n_in) {
  if (n_in <= 0) throw std::invalid_argument("SmoothMap: n_in must be positive");
  if (components.empty()) throw std::invalid_argument("SmoothMap: no components");
  for (const Expr& c : components)
    if (c.min_arity() > n_in)
      throw std::invalid_argument("SmoothMap: component '" + c.str() +
                                  "' uses more variables than n_in = " + std::to_string(n_in));
  SmoothMap m;
  m.n_in_ = n_in;
  m.n_out_ = static_cast<int>(components.size());
  m.exact_ = true;
  m.exprs_ = std::move(components);
  return m;
}

SmoothMap SmoothMap::from_callable(int n_in, int n_out, Fn fn, double fd_step) {
  if (n_in <= 0 || n_out <= 0) throw std::invalid_argument("SmoothMap: bad arity");
  if (!fn) throw std::invalid_argument("SmoothMap: null callable");
  if (!(fd_step > 0.0)) throw std::invalid_argument("SmoothMap: fd_step must be positive");
  SmoothMap m;
  m.n_in_ = n_in;
  m.n_out_ = n_out;
  m.exact_ = false;
  m.fn_ = std::move(fn);
  m.fd_step_ = fd_step;
  return m;
}

Vec SmoothMap::operator()(std::span<const double> x) const {
  if (!valid()) throw std::logic_error("SmoothMap: empty map");
  if (static_cast<int>(x.size()) != n_in_)
    throw std::invalid_argument("SmoothMap: point has wrong dimension");
  if (exact_) {
    Vec y(static_cast<std::size_t>(n_out_));
    for (int c = 0; c < n_out_; ++c) y[static_cast<std::size_t>(c)] = exprs_[static_cast<std::size_t>(c)](x);
    return y;
  }
  Vec y = fn_(x);
  if (static_cast<int>(y.size()) != n_out_)
    throw std::runtime_error("SmoothMap: callable returned wrong dimension");
  return y;
}

Mat SmoothMap::jacobian(std::span<const double> x) const {
  if (!valid()) throw std::logic_error("SmoothMap: empty map");
  if (static_cast<int>(x.size()) != n_in_)
    throw std::invalid_argument("SmoothMap: point has wrong dimension");
  const auto no = static_cast<std::size_t>(n_out_);
  const auto ni = static_cast<std::size_t>(n_in_);
  Mat jac(no, ni);
  if (exact_) {
    for (std::size_t c = 0; c < no; ++c) {
      const Dual d = exprs_[c].eval_dual(x);
      for (std::size_t i = 0; i < ni; ++i) jac(c, i) = d.d[i];
    }
    return jac;
  }
  Vec p(x.begin(), x.end());
  for (std::size_t i = 0; i < ni; ++i) {
    const double xi = p[i];
    const double h = rel_step(fd_step_, xi);
    auto shifted = [&](double dx) {
      p[i] = xi + dx;
      Vec y = (*this)(p);
      p[i] = xi;
      return y;
    };
    const Vec yp = shifted(h), ym = shifted(-h);
    const Vec yph = shifted(0.5 * h), ymh = shifted(-0.5 * h);
    for (std::size_t c = 0; c < no; ++c) {
      const double coarse = (yp[c] - ym[c]) / (2.0 * h);
      const double fine = (yph[c] - ymh[c]) / h;
      jac(c, i) = (4.0 * fine - coarse) / 3.0;
    }
  }
  return jac;
}

Tensor3 SmoothMap::hessian(std::span<const double> x) const {
  if (!valid()) throw std::logic_error("SmoothMap: empty map");
  if (static_cast<int>(x.size()) != n_in_)
    throw std::invalid_argument("SmoothMap: point has wrong dimension");
  const auto no = static_cast<std::size_t>(n_out_);
  const auto ni = static_cast<std::size_t>(n_in_);
  Tensor3 hess(no, ni, ni);
  if (exact_) {
    for (std::size_t c = 0; c < no; ++c) {
      const Jet2 j = exprs_[c].eval_jet(x);
      for (std::size_t a = 0; a < ni; ++a)
        for (std::size_t b = 0; b < ni; ++b) hess(c, a, b) = j.h(a, b);
    }
    return hess;
  }
  Vec p(x.begin(), x.end());
  const Vec y0 = (*this)(p);
  for (std::size_t a = 0; a < ni; ++a) {
    const double xa = p[a];
    const double ha = rel_step(fd_step_, xa);
    // Diagonal: second central difference, Richardson to h^4.
    auto diag = [&](double h) {
      p[a] = xa + h;
      const Vec yp = (*this)(p);
      p[a] = xa - h;
      const Vec ym = (*this)(p);
      p[a] = xa;
      Vec r(no);
      for (std::size_t c = 0; c < no; ++c) r[c] = (yp[c] - 2.0 * y0[c] + ym[c]) / (h * h);
      return r;
    };
    const Vec dc = diag(ha), df = diag(0.5 * ha);
    for (std::size_t c = 0; c < no; ++c) hess(c, a, a) = (4.0 * df[c] - dc[c]) / 3.0;

    for (std::size_t b = a + 1; b < ni; ++b) {
      const double xb = p[b];
      const double hb = rel_step(fd_step_, xb);
      auto cross = [&](double sa, double sb) {
        p[a] = xa + sa;
        p[b] = xb + sb;
        Vec y = (*this)(p);
        p[a] = xa;
        p[b] = xb;
        return y;
      };
      auto mixed = [&](double scale) {
        const double da = scale * ha, db = scale * hb;
        const Vec ypp = cross(da, db), ypm = cross(da, -db);
        const Vec ymp = cross(-da, db), ymm = cross(-da, -db);
        Vec r(no);
        for (std::size_t c = 0; c < no; ++c)
          r[c] = (ypp[c] - ypm[c] - ymp[c] + ymm[c]) / (4.0 * da * db);
        return r;
      };
      const Vec mc = mixed(1.0), mf = mixed(0.5);
      for (std::size_t c = 0; c < no; ++c) {
        const double v = (4.0 * mf[c] - mc[c]) / 3.0;
        hess(c, a, b) = v;
        hess(c, b, a) = v;
      }
    }
  }
  return hess;
}

std::vector<Jet2> SmoothMap::jets(std::span<const double> x) const {
  if (!valid()) throw std::logic_error("SmoothMap: empty map");
  const auto no = static_cast<std::size_t>(n_out_);
  const auto ni = static_cast<std::size_t>(n_in_);
  std::vector<Jet2> out;
  out.reserve(no);
  if (exact_) {
    for (std::size_t c = 0; c < no; ++c) out.push_back(exprs_[c].eval_jet(x));
    return out;
  }
  const Vec y = (*this)(x);
  const Mat jac = jacobian(x);
  const Tensor3 hess = hessian(x);
  for (std::size_t c = 0; c < no; ++c) {
    Jet2 j = Jet2::constant(y[c], ni);
    for (std::size_t i = 0; i < ni; ++i) j.g[i] = jac(c, i);
    for (std::size_t a = 0; a < ni; ++a)
      for (std::size_t b = 0; b < ni; ++b) j.h(a, b) = hess(c, a, b);
    out.push_back(std::move(j));
  }
  return out;
}

const std::vector<Expr>* SmoothMap::expressions() const {
  return exact_ ? &exprs_ : nullptr;
}

SmoothMap SmoothMap::compose(const SmoothMap& inner) const {
  if (!valid() || !inner.valid()) throw std::logic_error("SmoothMap: empty map");
  if (inner.n_out() != n_in_)
    throw std::invalid_argument("SmoothMap: composition arity mismatch (" +
                                std::to_string(inner.n_out()) + " -> " + std::to_string(n_in_) +
                                ")");
  if (exact_ && inner.exact_) {
    std::vector<Expr> comps;
    comps.reserve(exprs_.size());
    for (const Expr& c : exprs_) comps.push_back(c.substitute(inner.exprs_));
    return from_expressions(std::move(comps), inner.n_in());
  }
  SmoothMap outer = *this;
  SmoothMap in = inner;
  return from_callable(
      inner.n_in(), n_out_,
      [outer, in](std::span<const double> x) { return outer(in(x)); },
      std::min(fd_step_, inner.fd_step_));
}

// ---- ScalarField ----

ScalarField ScalarField::from_expression(Expr e, int n_in) {
  ScalarField f;
  f.m_ = SmoothMap::from_expressions({std::move(e)}, n_in);
  return f;
}

ScalarField ScalarField::from_callable(int n_in, std::function<double(std::span<const double>)> fn,
                                       double fd_step) {
  if (!fn) throw std::invalid_argument("ScalarField: null callable");
  ScalarField f;
  f.m_ = SmoothMap::from_callable(
      n_in, 1, [fn = std::move(fn)](std::span<const double> x) { return Vec{fn(x)}; }, fd_step);
  return f;
}

ScalarField ScalarField::zero(int n_in) { return from_expression(Expr::constant(0.0), n_in); }

double ScalarField::operator()(std::span<const double> x) const { return m_(x)[0]; }

Vec ScalarField::gradient(std::span<const double> x) const {
  const Mat j = m_.jacobian(x);
  Vec g(j.cols());
  for (std::size_t i = 0; i < j.cols(); ++i) g[i] = j(0, i);
  return g;
}

Mat ScalarField::hessian(std::span<const double> x) const {
  const Tensor3 h = m_.hessian(x);
  Mat out(h.dim1(), h.dim2());
  for (std::size_t a = 0; a < h.dim1(); ++a)
    for (std::size_t b = 0; b < h.dim2(); ++b) out(a, b) = h(0, a, b);
  return out;
}

const Expr* ScalarField::expression() const {
  const auto* e = m_.expressions();
  return e ? &e->front() : nullptr;
}

}  // namespace nst
