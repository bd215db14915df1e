#include "quantum.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace nst {

namespace {

std::string num_str(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

double metric_at(const MetricField& g, double x, const char* who) {
  const double v = g.value(std::span<const double>(&x, 1))(0, 0);
  if (!(v > 0.0))
    throw SingularMetric(std::string(who) + ": metric " + num_str(v) +
                         " is not positive at x = " + num_str(x));
  return v;
}

// Sturm count with the usual guarded LDL recurrence.
std::size_t count_below(const Vec& diag, const Vec& off, double lambda) {
  std::size_t cnt = 0;
  double d = 1.0;
  for (std::size_t j = 0; j < diag.size(); ++j) {
    const double b2 = j == 0 ? 0.0 : off[j - 1] * off[j - 1];
    d = diag[j] - lambda - b2 / d;
    if (d == 0.0) d = -1e-300;
    if (d < 0.0) ++cnt;
  }
  return cnt;
}

void gershgorin(const Vec& diag, const Vec& off, double* lo, double* hi) {
  *lo = diag[0];
  *hi = diag[0];
  for (std::size_t j = 0; j < diag.size(); ++j) {
    double r = 0.0;
    if (j > 0) r += std::abs(off[j - 1]);
    if (j + 1 < diag.size()) r += std::abs(off[j]);
    *lo = std::min(*lo, diag[j] - r);
    *hi = std::max(*hi, diag[j] + r);
  }
}

// k-th smallest eigenvalue (0-based) by bisection on the Sturm count.
double eigenvalue_by_index(const Vec& diag, const Vec& off, std::size_t k) {
  double lo, hi;
  gershgorin(diag, off, &lo, &hi);
  const double span = hi - lo;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (count_below(diag, off, mid) <= k)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-15 * std::max(1.0, std::abs(lo)) + 1e-306 * span) break;
  }
  return 0.5 * (lo + hi);
}

// Hat-function weights of a point strictly inside the node range.
struct HatPosition {
  std::size_t j0;
  double theta;
};

HatPosition locate(const Grid1D& grid, double x, const char* who) {
  const double u = (x - grid.x_min) / grid.h() - 1.0;
  const double fl = std::floor(u);
  auto j0 = static_cast<std::ptrdiff_t>(fl);
  double theta = u - fl;
  if (j0 >= 0 && static_cast<std::size_t>(j0) == grid.n - 1 && theta == 0.0) {
    // exactly on the last node: bracket leftward
    --j0;
    theta = 1.0;
  }
  if (j0 < 0 || static_cast<std::size_t>(j0) + 1 >= grid.n)
    throw ValidationError({std::string(who) + ": probe point " + num_str(x) +
                           " is not strictly inside the grid node range"});
  return {static_cast<std::size_t>(j0), theta};
}

}  // namespace

Grid1DOperator discretize_hamiltonian(const SystemSpec& sys, const Grid1D& grid) {
  if (sys.dim != 1)
    throw UnsupportedDimension("discretize_hamiltonian: only one-dimensional systems");
  if (!(sys.hbar > 0.0))
    throw std::invalid_argument("discretize_hamiltonian: hbar must be positive");
  if (grid.n < 3 || !(grid.x_max > grid.x_min))
    throw std::invalid_argument("discretize_hamiltonian: degenerate grid");

  const double h = grid.h();
  const double kin = sys.hbar * sys.hbar / (2.0 * sys.mass);
  const std::size_t n = grid.n;

  Vec c(n + 1);  // g^{-1/2} at midpoints x_min + (j + 1/2) h, j = 0..n
  for (std::size_t j = 0; j <= n; ++j) {
    const double xm = grid.x_min + (static_cast<double>(j) + 0.5) * h;
    c[j] = 1.0 / std::sqrt(metric_at(sys.metric, xm, "discretize_hamiltonian"));
  }

  Grid1DOperator op;
  op.grid = grid;
  op.diag.resize(n);
  op.off.resize(n - 1);
  op.weight.resize(n);
  Vec w(n);  // g^{-1/4} at nodes
  for (std::size_t j = 0; j < n; ++j) {
    const double x = grid.node(j);
    const double g = metric_at(sys.metric, x, "discretize_hamiltonian");
    w[j] = std::pow(g, -0.25);
    op.weight[j] = std::pow(g, 0.25);
    const double xj = x;
    op.diag[j] = kin * w[j] * w[j] * (c[j] + c[j + 1]) / (h * h) +
                 sys.scalar_potential(std::span<const double>(&xj, 1));
  }
  for (std::size_t j = 0; j + 1 < n; ++j)
    op.off[j] = -kin * w[j] * c[j + 1] * w[j + 1] / (h * h);
  return op;
}

std::size_t sturm_count_below(const Grid1DOperator& op, double lambda) {
  return count_below(op.diag, op.off, lambda);
}

Vec lowest_eigenvalues(const Grid1DOperator& op, std::size_t m) {
  m = std::min(m, op.diag.size());
  Vec out(m);
  for (std::size_t k = 0; k < m; ++k) out[k] = eigenvalue_by_index(op.diag, op.off, k);
  return out;
}

double eigenvalue_nearest(const Grid1DOperator& op, double target) {
  const std::size_t n = op.diag.size();
  const std::size_t m = count_below(op.diag, op.off, target);
  double best = 0.0;
  bool have = false;
  if (m > 0) {
    best = eigenvalue_by_index(op.diag, op.off, m - 1);
    have = true;
  }
  if (m < n) {
    const double up = eigenvalue_by_index(op.diag, op.off, m);
    if (!have || std::abs(up - target) < std::abs(best - target)) best = up;
  }
  return best;
}

Vec solve_shifted(const Grid1DOperator& op, double shift, std::span<const double> rhs) {
  const std::size_t n = op.diag.size();
  if (rhs.size() != n) throw std::invalid_argument("solve_shifted: rhs size mismatch");
  Vec d(n), l(n > 0 ? n - 1 : 0), x(rhs.begin(), rhs.end());
  double scale = 0.0;
  for (std::size_t j = 0; j < n; ++j) scale = std::max(scale, std::abs(op.diag[j] - shift));
  const double tiny = 1e-14 * std::max(scale, 1e-300);
  d[0] = op.diag[0] - shift;
  for (std::size_t j = 0; j + 1 < n; ++j) {
    if (std::abs(d[j]) < tiny)
      throw SingularLinearSolve("solve_shifted: pivot underflow at row " + std::to_string(j));
    l[j] = op.off[j] / d[j];
    d[j + 1] = op.diag[j + 1] - shift - l[j] * op.off[j];
  }
  if (std::abs(d[n - 1]) < tiny)
    throw SingularLinearSolve("solve_shifted: shift sits on an eigenvalue");
  for (std::size_t j = 1; j < n; ++j) x[j] -= l[j - 1] * x[j - 1];
  for (std::size_t j = 0; j < n; ++j) x[j] /= d[j];
  for (std::size_t j = n - 1; j-- > 0;) x[j] -= l[j] * x[j + 1];
  return x;
}

ZeroModeReport zero_mode_spectral_check(const SystemSpec& init, const TransformSpec& tr,
                                        const Grid1D& grid_init, const Grid1D& grid_transformed,
                                        std::size_t n_levels, bool include_quantum_correction) {
  if (!(init.hbar > 0.0))
    throw std::invalid_argument("zero_mode_spectral_check: hbar must be positive");
  const Grid1DOperator op_t = discretize_hamiltonian(init, grid_init);

  ZeroModeReport rep;
  rep.initial_levels = lowest_eigenvalues(op_t, n_levels);
  rep.offsets.resize(rep.initial_levels.size());
  for (std::size_t k = 0; k < rep.initial_levels.size(); ++k) {
    TransformSpec trk = tr;
    trk.energy = rep.initial_levels[k];
    SystemSpec sys_s;
    sys_s.dim = init.dim;
    sys_s.mass = init.mass;
    sys_s.hbar = init.hbar;
    sys_s.metric = pull_metric(init, trk);
    sys_s.scalar_potential = include_quantum_correction ? quantum_potential_direct(init, trk)
                                                        : classical_potential(init, trk);
    sys_s.domain = trk.domain;
    const Grid1DOperator op_s = discretize_hamiltonian(sys_s, grid_transformed);
    rep.offsets[k] = std::abs(eigenvalue_nearest(op_s, 0.0));
  }
  return rep;
}

ResolventReport resolvent_dk_check(const SystemSpec& init, const TransformSpec& tr,
                                   const Grid1D& grid_init, const Grid1D& grid_transformed,
                                   double probe_energy,
                                   std::span<const std::array<double, 2>> probe_pairs,
                                   double prefactor_delta) {
  if (init.has_vector_potential())
    throw ValidationError(
        {"resolvent: a vector potential adds a path phase; the scalar kernel identity "
         "does not apply"});
  if (!tr.inverse_map.valid())
    throw ValidationError({"resolvent: transform must supply an inverse map"});
  if (!(init.hbar > 0.0))
    throw std::invalid_argument("resolvent_dk_check: hbar must be positive");

  const Grid1DOperator op_t = discretize_hamiltonian(init, grid_init);
  const double bottom = lowest_eigenvalues(op_t, 1)[0];
  const double gap = bottom - probe_energy;
  if (!(gap > 0.0))
    throw SpectrumOverlap("resolvent: probe energy " + num_str(probe_energy) +
                          " is not strictly below the spectrum bottom " + num_str(bottom));

  TransformSpec trE = tr;
  trE.energy = probe_energy;
  SystemSpec sys_s;
  sys_s.dim = init.dim;
  sys_s.mass = init.mass;
  sys_s.hbar = init.hbar;
  sys_s.metric = pull_metric(init, trE);
  sys_s.scalar_potential = quantum_potential_direct(init, trE);
  sys_s.domain = trE.domain;
  const Grid1DOperator op_s = discretize_hamiltonian(sys_s, grid_transformed);
  const double bottom_s = lowest_eigenvalues(op_s, 1)[0];
  if (!(bottom_s > 0.0))
    throw SpectrumOverlap("resolvent: transformed operator is not positive (bottom " +
                          num_str(bottom_s) + ")");

  auto kernel = [](const Grid1DOperator& op, double shift, double xa, double xb,
                   double* residual) {
    const HatPosition pb = locate(op.grid, xb, "resolvent");
    Vec rhs(op.diag.size(), 0.0);
    const double h = op.grid.h();
    rhs[pb.j0] = (1.0 - pb.theta) / h;
    rhs[pb.j0 + 1] = pb.theta / h;
    const Vec x = solve_shifted(op, shift, rhs);
    // back-substitution residual, scaled by |b|_inf = 1/h at most
    double r = 0.0, bmax = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      double ax = (op.diag[j] - shift) * x[j];
      if (j > 0) ax += op.off[j - 1] * x[j - 1];
      if (j + 1 < x.size()) ax += op.off[j] * x[j + 1];
      r = std::max(r, std::abs(ax - rhs[j]));
      bmax = std::max(bmax, std::abs(rhs[j]));
    }
    *residual = std::max(*residual, r / bmax);
    const HatPosition pa = locate(op.grid, xa, "resolvent");
    return (1.0 - pa.theta) * x[pa.j0] + pa.theta * x[pa.j0 + 1];
  };

  ResolventReport rep;
  rep.spectral_gap = gap;
  const double expo = 0.25 + prefactor_delta;  // f-power per endpoint, D = 1
  for (const auto& pair : probe_pairs) {
    ResolventPoint pt;
    pt.q_a = pair[0];
    pt.q_b = pair[1];
    pt.direct = kernel(op_t, probe_energy, pt.q_a, pt.q_b, &rep.max_solve_residual);

    double pref = 1.0;
    double Qab[2];
    for (int e = 0; e < 2; ++e) {
      const double q = e == 0 ? pt.q_a : pt.q_b;
      const Vec Q = tr.inverse_map(std::span<const double>(&q, 1));
      Qab[e] = Q[0];
      const double fQ = tr.time_scale(Q);
      if (!(fQ > 0.0)) throw NonPositiveTimeScale("resolvent: f(Q) = " + num_str(fQ));
      const double gi = metric_at(init.metric, q, "resolvent");
      const double gf = metric_at(sys_s.metric, Q[0], "resolvent");
      pref *= std::pow(fQ, expo) * std::pow(gi, 0.25) * std::pow(gf, -0.25);
    }
    pt.mapped = pref * kernel(op_s, 0.0, Qab[0], Qab[1], &rep.max_solve_residual);
    pt.rel_error = std::abs(pt.direct - pt.mapped) /
                   std::max({std::abs(pt.direct), std::abs(pt.mapped), 1e-300});
    rep.max_rel_error = std::max(rep.max_rel_error, pt.rel_error);
    rep.points.push_back(pt);
  }
  return rep;
}

}  // namespace nst
