#pragma once
// Forward-mode derivative carriers.
//
// Dual : value + gradient (first order, all input directions at once).
// Jet2 : value + gradient + full Hessian (second order).
//
// Both propagate through the arithmetic ops and the function set used by the
// expression layer (exp, log, sin, cos, sqrt, pow). Hessians are symmetric by
// construction.

#include <cmath>
#include <stdexcept>

#include "linalg.hpp"

namespace nst {

struct Dual {
  double v = 0.0;
  Vec d;  // d[i] = dv/dx_i

  static Dual constant(double c, std::size_t n) { return {c, Vec(n, 0.0)}; }
  static Dual variable(double x, std::size_t i, std::size_t n) {
    Dual j{x, Vec(n, 0.0)};
    j.d[i] = 1.0;
    return j;
  }
  std::size_t n() const { return d.size(); }
};

inline Dual operator+(const Dual& a, const Dual& b) {
  Dual c{a.v + b.v, a.d};
  for (std::size_t i = 0; i < c.d.size(); ++i) c.d[i] += b.d[i];
  return c;
}
inline Dual operator-(const Dual& a, const Dual& b) {
  Dual c{a.v - b.v, a.d};
  for (std::size_t i = 0; i < c.d.size(); ++i) c.d[i] -= b.d[i];
  return c;
}
inline Dual operator-(const Dual& a) {
  Dual c{-a.v, a.d};
  for (double& x : c.d) x = -x;
  return c;
}
inline Dual operator*(const Dual& a, const Dual& b) {
  Dual c{a.v * b.v, Vec(a.d.size())};
  for (std::size_t i = 0; i < c.d.size(); ++i) c.d[i] = a.d[i] * b.v + a.v * b.d[i];
  return c;
}
inline Dual operator/(const Dual& a, const Dual& b) {
  if (b.v == 0.0) throw std::domain_error("dual: division by zero");
  Dual c{a.v / b.v, Vec(a.d.size())};
  const double inv = 1.0 / b.v;
  for (std::size_t i = 0; i < c.d.size(); ++i)
    c.d[i] = (a.d[i] - c.v * b.d[i]) * inv;
  return c;
}

// Apply scalar function given phi(v) and phi'(v).
inline Dual chain(const Dual& a, double f, double fp) {
  Dual c{f, Vec(a.d.size())};
  for (std::size_t i = 0; i < c.d.size(); ++i) c.d[i] = fp * a.d[i];
  return c;
}

inline Dual exp(const Dual& a) {
  const double e = std::exp(a.v);
  return chain(a, e, e);
}
inline Dual log(const Dual& a) {
  if (a.v <= 0.0) throw std::domain_error("dual: log of non-positive value");
  return chain(a, std::log(a.v), 1.0 / a.v);
}
inline Dual sin(const Dual& a) { return chain(a, std::sin(a.v), std::cos(a.v)); }
inline Dual cos(const Dual& a) { return chain(a, std::cos(a.v), -std::sin(a.v)); }
inline Dual sqrt(const Dual& a) {
  if (a.v < 0.0) throw std::domain_error("dual: sqrt of negative value");
  const double s = std::sqrt(a.v);
  if (s == 0.0) throw std::domain_error("dual: sqrt derivative singular at zero");
  return chain(a, s, 0.5 / s);
}
// x^p, p constant. Integral p admits non-positive bases.
inline Dual pow(const Dual& a, double p) {
  if (p == std::floor(p)) {
    const double f = std::pow(a.v, p);
    if (p != 0.0 && a.v == 0.0 && p < 1.0)
      throw std::domain_error("dual: pow derivative singular at zero");
    const double fp = (p == 0.0) ? 0.0 : p * std::pow(a.v, p - 1.0);
    return chain(a, f, fp);
  }
  if (a.v <= 0.0) throw std::domain_error("dual: pow of non-positive base");
  const double f = std::pow(a.v, p);
  return chain(a, f, p * f / a.v);
}
inline Dual pow(const Dual& a, const Dual& b) {
  bool b_const = true;
  for (double x : b.d)
    if (x != 0.0) b_const = false;
  if (b_const) return pow(a, b.v);
  if (a.v <= 0.0) throw std::domain_error("dual: pow of non-positive base");
  return exp(b * log(a));
}

struct Jet2 {
  double v = 0.0;
  Vec g;   // gradient
  Mat h;   // Hessian (symmetric)

  static Jet2 constant(double c, std::size_t n) { return {c, Vec(n, 0.0), Mat(n, n)}; }
  static Jet2 variable(double x, std::size_t i, std::size_t n) {
    Jet2 j{x, Vec(n, 0.0), Mat(n, n)};
    j.g[i] = 1.0;
    return j;
  }
  std::size_t n() const { return g.size(); }
};

inline Jet2 operator+(const Jet2& a, const Jet2& b) {
  Jet2 c = a;
  c.v += b.v;
  for (std::size_t i = 0; i < c.n(); ++i) c.g[i] += b.g[i];
  c.h += b.h;
  return c;
}
inline Jet2 operator-(const Jet2& a, const Jet2& b) {
  Jet2 c = a;
  c.v -= b.v;
  for (std::size_t i = 0; i < c.n(); ++i) c.g[i] -= b.g[i];
  c.h -= b.h;
  return c;
}
inline Jet2 operator-(const Jet2& a) {
  Jet2 c = a;
  c.v = -c.v;
  for (double& x : c.g) x = -x;
  c.h *= -1.0;
  return c;
}
inline Jet2 operator*(const Jet2& a, const Jet2& b) {
  const std::size_t n = a.n();
  Jet2 c{a.v * b.v, Vec(n), Mat(n, n)};
  for (std::size_t i = 0; i < n; ++i) c.g[i] = a.g[i] * b.v + a.v * b.g[i];
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      c.h(i, j) = a.h(i, j) * b.v + a.v * b.h(i, j) + a.g[i] * b.g[j] + a.g[j] * b.g[i];
  return c;
}

// phi applied to a: phi(v), phi'(v), phi''(v).
inline Jet2 chain(const Jet2& a, double f, double fp, double fpp) {
  const std::size_t n = a.n();
  Jet2 c{f, Vec(n), Mat(n, n)};
  for (std::size_t i = 0; i < n; ++i) c.g[i] = fp * a.g[i];
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      c.h(i, j) = fp * a.h(i, j) + fpp * a.g[i] * a.g[j];
  return c;
}

inline Jet2 inv(const Jet2& a) {
  if (a.v == 0.0) throw std::domain_error("jet: division by zero");
  const double iv = 1.0 / a.v;
  return chain(a, iv, -iv * iv, 2.0 * iv * iv * iv);
}
inline Jet2 operator/(const Jet2& a, const Jet2& b) { return a * inv(b); }

inline Jet2 exp(const Jet2& a) {
  const double e = std::exp(a.v);
  return chain(a, e, e, e);
}
inline Jet2 log(const Jet2& a) {
  if (a.v <= 0.0) throw std::domain_error("jet: log of non-positive value");
  const double iv = 1.0 / a.v;
  return chain(a, std::log(a.v), iv, -iv * iv);
}
inline Jet2 sin(const Jet2& a) {
  const double s = std::sin(a.v), c = std::cos(a.v);
  return chain(a, s, c, -s);
}
inline Jet2 cos(const Jet2& a) {
  const double s = std::sin(a.v), c = std::cos(a.v);
  return chain(a, c, -s, -c);
}
inline Jet2 sqrt(const Jet2& a) {
  if (a.v < 0.0) throw std::domain_error("jet: sqrt of negative value");
  const double s = std::sqrt(a.v);
  if (s == 0.0) throw std::domain_error("jet: sqrt derivative singular at zero");
  return chain(a, s, 0.5 / s, -0.25 / (s * a.v));
}
inline Jet2 pow(const Jet2& a, double p) {
  if (p == std::floor(p)) {
    if (a.v == 0.0 && p != 0.0 && p < 2.0)
      throw std::domain_error("jet: pow derivative singular at zero");
    const double f = std::pow(a.v, p);
    const double fp = (p == 0.0) ? 0.0 : p * std::pow(a.v, p - 1.0);
    const double fpp = (p == 0.0 || p == 1.0) ? 0.0 : p * (p - 1.0) * std::pow(a.v, p - 2.0);
    return chain(a, f, fp, fpp);
  }
  if (a.v <= 0.0) throw std::domain_error("jet: pow of non-positive base");
  const double f = std::pow(a.v, p);
  return chain(a, f, p * f / a.v, p * (p - 1.0) * f / (a.v * a.v));
}
inline Jet2 pow(const Jet2& a, const Jet2& b) {
  bool b_const = (max_abs(b.h) == 0.0);
  for (double x : b.g)
    if (x != 0.0) b_const = false;
  if (b_const) return pow(a, b.v);
  if (a.v <= 0.0) throw std::domain_error("jet: pow of non-positive base");
  return exp(b * log(a));
}

}  // namespace nst
