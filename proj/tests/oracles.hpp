// Independent reference implementations used to cross-check the library.
// Everything here is deliberately primitive: plain central differences with
// one Richardson step, a dense cyclic Jacobi eigensolver, and textbook
// closed-form spectra. None of it shares code with src/.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

namespace oracle {

using Fn1 = std::function<double(double)>;
using FnN = std::function<double(const std::vector<double>&)>;

// d/dx f at x: central difference, Richardson-extrapolated once. O(h^4).
inline double derivative(const Fn1& f, double x, double h = 1e-3) {
  auto d = [&](double hh) { return (f(x + hh) - f(x - hh)) / (2.0 * hh); };
  return (4.0 * d(h / 2.0) - d(h)) / 3.0;
}

// d^2/dx^2 f at x. O(h^4).
inline double second_derivative(const Fn1& f, double x, double h = 1e-3) {
  auto s = [&](double hh) { return (f(x + hh) - 2.0 * f(x) + f(x - hh)) / (hh * hh); };
  return (4.0 * s(h / 2.0) - s(h)) / 3.0;
}

inline double partial(const FnN& f, std::vector<double> x, int i, double h = 1e-3) {
  return derivative(
      [&](double xi) {
        x[i] = xi;
        return f(x);
      },
      x[i], h);
}

inline double second_partial(const FnN& f, std::vector<double> x, int i, int j, double h = 1e-3) {
  if (i == j)
    return second_derivative(
        [&](double xi) {
          x[i] = xi;
          return f(x);
        },
        x[i], h);
  const double xi = x[i], xj = x[j];
  auto cross = [&](double hh) {
    auto at = [&](double a, double b) {
      x[i] = xi + a;
      x[j] = xj + b;
      return f(x);
    };
    return (at(hh, hh) - at(hh, -hh) - at(-hh, hh) + at(-hh, -hh)) / (4.0 * hh * hh);
  };
  return (4.0 * cross(h / 2.0) - cross(h)) / 3.0;
}

// Eigenvalues of a dense symmetric matrix (flat row-major n*n) by cyclic
// Jacobi rotations. Returns them sorted ascending.
inline std::vector<double> jacobi_eigenvalues(std::vector<double> a, int n) {
  auto at = [&](int i, int j) -> double& { return a[static_cast<std::size_t>(i) * n + j]; };
  // Sweep until the off-diagonal mass stops shrinking (rounding floor).
  double prev = std::numeric_limits<double>::infinity();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += at(i, j) * at(i, j);
    if (off == 0.0 || off >= prev) break;
    prev = off;
    if (sweep == 99) throw std::runtime_error("jacobi_eigenvalues: no convergence");
    for (int p = 0; p < n - 1; ++p)
      for (int q = p + 1; q < n; ++q) {
        const double apq = at(p, q);
        if (apq == 0.0) continue;
        const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = at(k, p), akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = at(p, k), aqk = at(q, k);
          at(p, k) = c * apk - s * aqk;
          at(q, k) = s * apk + c * aqk;
        }
      }
  }
  std::vector<double> ev(n);
  for (int i = 0; i < n; ++i) ev[i] = at(i, i);
  std::sort(ev.begin(), ev.end());
  return ev;
}

// Particle in a box of width L, levels n = 1, 2, ...
inline double box_level(int n, double L, double m, double hbar) {
  const double k = n * M_PI / L;
  return hbar * hbar * k * k / (2.0 * m);
}

// Radial (s-wave) Coulomb problem -alpha/q on (0, inf), Dirichlet at 0:
// E_n = -m alpha^2 / (2 hbar^2 n^2), n = 1, 2, ...
inline double coulomb_level(int n, double alpha, double m, double hbar) {
  return -m * alpha * alpha / (2.0 * hbar * hbar * n * n);
}

// Harmonic oscillator levels, n = 0, 1, ...
inline double oscillator_level(int n, double omega, double hbar) {
  return (n + 0.5) * hbar * omega;
}

}  // namespace oracle
