#include "classical.hpp"

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

// Dormand-Prince 5(4) tableau.
constexpr double kA21 = 1.0 / 5;
constexpr double kA31 = 3.0 / 40, kA32 = 9.0 / 40;
constexpr double kA41 = 44.0 / 45, kA42 = -56.0 / 15, kA43 = 32.0 / 9;
constexpr double kA51 = 19372.0 / 6561, kA52 = -25360.0 / 2187, kA53 = 64448.0 / 6561,
                 kA54 = -212.0 / 729;
constexpr double kA61 = 9017.0 / 3168, kA62 = -355.0 / 33, kA63 = 46732.0 / 5247,
                 kA64 = 49.0 / 176, kA65 = -5103.0 / 18656;
constexpr double kB1 = 35.0 / 384, kB3 = 500.0 / 1113, kB4 = 125.0 / 192,
                 kB5 = -2187.0 / 6784, kB6 = 11.0 / 84;
// 5th-order minus embedded 4th-order weights (for the error estimate).
constexpr double kE1 = kB1 - 5179.0 / 57600, kE3 = kB3 - 7571.0 / 16695,
                 kE4 = kB4 - 393.0 / 640, kE5 = kB5 + 92097.0 / 339200,
                 kE6 = kB6 - 187.0 / 2100, kE7 = -1.0 / 40;
constexpr double kC2 = 1.0 / 5, kC3 = 3.0 / 10, kC4 = 4.0 / 5, kC5 = 8.0 / 9;

struct Stepper {
  const OdeRhs& rhs;
  int dim;  // space dimension; state size is 2*dim
  const IntegratorConfig& cfg;
  const DomainBox* box;           // may be nullptr (no policing)
  const ScalarField* clock_rate;  // may be nullptr (no clock)

  double tau = 0.0;
  Vec y = {};
  double clock = 0.0;
  double h = 0.0;
  Vec k1 = {};  // FSAL cache at (tau, y)
  bool have_k1 = false;
  std::size_t steps_used = 0;

  std::size_t n() const { return y.size(); }

  bool position_inside(const Vec& state) const {
    return !box || box->contains(std::span<const double>(state).subspan(0, dim));
  }

  // One Dormand-Prince step of size hh from (tau, y) with cached k1.
  // Fills y5 (5th-order result), errv (embedded error), k7 (FSAL slope).
  void rk_step(double hh, Vec* y5, Vec* errv, Vec* k7) const {
    const std::size_t m = n();
    Vec k2(m), k3(m), k4(m), k5(m), k6(m), w(m);
    for (std::size_t i = 0; i < m; ++i) w[i] = y[i] + hh * kA21 * k1[i];
    rhs(tau + kC2 * hh, w, k2);
    for (std::size_t i = 0; i < m; ++i) w[i] = y[i] + hh * (kA31 * k1[i] + kA32 * k2[i]);
    rhs(tau + kC3 * hh, w, k3);
    for (std::size_t i = 0; i < m; ++i)
      w[i] = y[i] + hh * (kA41 * k1[i] + kA42 * k2[i] + kA43 * k3[i]);
    rhs(tau + kC4 * hh, w, k4);
    for (std::size_t i = 0; i < m; ++i)
      w[i] = y[i] + hh * (kA51 * k1[i] + kA52 * k2[i] + kA53 * k3[i] + kA54 * k4[i]);
    rhs(tau + kC5 * hh, w, k5);
    for (std::size_t i = 0; i < m; ++i)
      w[i] = y[i] + hh * (kA61 * k1[i] + kA62 * k2[i] + kA63 * k3[i] + kA64 * k4[i] +
                          kA65 * k5[i]);
    rhs(tau + hh, w, k6);
    y5->resize(m);
    for (std::size_t i = 0; i < m; ++i)
      (*y5)[i] = y[i] + hh * (kB1 * k1[i] + kB3 * k3[i] + kB4 * k4[i] + kB5 * k5[i] +
                              kB6 * k6[i]);
    k7->resize(m);
    rhs(tau + hh, *y5, *k7);
    errv->resize(m);
    for (std::size_t i = 0; i < m; ++i)
      (*errv)[i] = hh * (kE1 * k1[i] + kE3 * k3[i] + kE4 * k4[i] + kE5 * k5[i] +
                         kE6 * k6[i] + kE7 * (*k7)[i]);
  }

  double error_norm(const Vec& y1, const Vec& errv) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < n(); ++i) {
      const double sc = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y[i]), std::abs(y1[i]));
      const double r = errv[i] / sc;
      acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(n()));
  }

  // One implicit-midpoint step (fixed point iteration on the stage value).
  Vec midpoint_step(double hh) const {
    const std::size_t m = n();
    Vec f(m), y1(m), mid(m);
    rhs(tau, y, f);
    for (std::size_t i = 0; i < m; ++i) y1[i] = y[i] + hh * f[i];
    for (int iter = 0; iter < 64; ++iter) {
      for (std::size_t i = 0; i < m; ++i) mid[i] = 0.5 * (y[i] + y1[i]);
      rhs(tau + 0.5 * hh, mid, f);
      double delta = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        const double next = y[i] + hh * f[i];
        delta = std::max(delta, std::abs(next - y1[i]));
        y1[i] = next;
      }
      if (delta < 1e-13 * (1.0 + std::abs(y1[0]))) return y1;
    }
    throw StepFailure("implicit midpoint iteration did not converge at tau = " + num_str(tau));
  }

  // Cubic-Hermite quadrature of the clock rate over one accepted step.
  void accumulate_clock(const Vec& y0, const Vec& y1, double hh) {
    if (!clock_rate) return;
    const auto x0 = std::span<const double>(y0).subspan(0, dim);
    const auto v0 = std::span<const double>(y0).subspan(dim, dim);
    const auto x1 = std::span<const double>(y1).subspan(0, dim);
    const auto v1 = std::span<const double>(y1).subspan(dim, dim);
    const double f0 = (*clock_rate)(x0);
    const double f1 = (*clock_rate)(x1);
    const Vec g0 = clock_rate->gradient(x0);
    const Vec g1 = clock_rate->gradient(x1);
    double d0 = 0.0, d1 = 0.0;
    for (int i = 0; i < dim; ++i) {
      d0 += g0[i] * v0[i];
      d1 += g1[i] * v1[i];
    }
    clock += 0.5 * hh * (f0 + f1) + hh * hh / 12.0 * (d0 - d1);
  }

  // The accepted candidate left the box: bisect to the first face crossing,
  // advance there, and reflect the outgoing velocity components.
  void reflect_at_wall(double hh, Vec y_outside) {
    double lo = 0.0, hi = hh;
    Vec ylo = y, yhi = std::move(y_outside), errv, k7;
    for (int iter = 0; iter < 100 && hi - lo > 1e-14 * hh; ++iter) {
      const double mid = 0.5 * (lo + hi);
      Vec ym;
      if (cfg.method == OdeMethod::kDopri5) {
        rk_step(mid, &ym, &errv, &k7);
      } else {
        ym = midpoint_step(mid);
      }
      if (position_inside(ym)) {
        lo = mid;
        ylo = ym;
      } else {
        hi = mid;
        yhi = ym;
      }
    }
    if (lo == 0.0) {
      // The state already sits on a face with outgoing velocity (e.g. a step
      // that landed exactly on the wall): reflect in place instead of
      // bisecting a zero-length interval.
      bool flipped = false;
      for (int i = 0; i < dim; ++i) {
        const double sc = std::max({1.0, std::abs(box->lo[i]), std::abs(box->hi[i])});
        if (yhi[i] < box->lo[i] && y[i] - box->lo[i] <= 1e-12 * sc) {
          y[i] = box->lo[i];
          if (y[dim + i] < 0.0) {
            y[dim + i] = -y[dim + i];
            flipped = true;
          }
        } else if (yhi[i] > box->hi[i] && box->hi[i] - y[i] <= 1e-12 * sc) {
          y[i] = box->hi[i];
          if (y[dim + i] > 0.0) {
            y[dim + i] = -y[dim + i];
            flipped = true;
          }
        }
      }
      if (!flipped)
        throw StepFailure("trajectory stalled on a domain wall at tau = " + num_str(tau));
      have_k1 = false;
      return;
    }
    accumulate_clock(y, ylo, lo);
    // Snap the crossing components onto their faces and flip outgoing speeds.
    for (int i = 0; i < dim; ++i) {
      if (yhi[i] < box->lo[i]) {
        ylo[i] = box->lo[i];
        if (ylo[dim + i] < 0.0) ylo[dim + i] = -ylo[dim + i];
      } else if (yhi[i] > box->hi[i]) {
        ylo[i] = box->hi[i];
        if (ylo[dim + i] > 0.0) ylo[dim + i] = -ylo[dim + i];
      }
    }
    tau += lo;
    y = std::move(ylo);
    have_k1 = false;  // slope changed discontinuously
  }

  void advance_to(double target) {
    constexpr double kMinScale = 1e-14;
    while (tau < target) {
      if (++steps_used > cfg.max_steps)
        throw StepFailure("integration exceeded " + std::to_string(cfg.max_steps) +
                          " steps before tau = " + num_str(target));
      const double remaining = target - tau;

      if (cfg.method == OdeMethod::kImplicitMidpoint) {
        const double hh = std::min(cfg.fixed_step, remaining);
        Vec y1 = midpoint_step(hh);
        if (!position_inside(y1)) {
          if (cfg.reflecting_walls) {
            reflect_at_wall(hh, std::move(y1));
            continue;
          }
          throw DomainExit("trajectory left the domain near tau = " + num_str(tau + hh));
        }
        accumulate_clock(y, y1, hh);
        y = std::move(y1);
        tau = hh == remaining ? target : tau + hh;
        continue;
      }

      if (!have_k1) {
        k1.resize(n());
        rhs(tau, y, k1);
        have_k1 = true;
      }
      const bool clamped = h >= remaining;
      const double hh = clamped ? remaining : h;
      Vec y1, errv, k7;
      rk_step(hh, &y1, &errv, &k7);
      const double err = error_norm(y1, errv);
      const double fac = std::min(5.0, std::max(0.2, 0.9 * std::pow(std::max(err, 1e-16), -0.2)));
      if (err > 1.0) {
        h = hh * fac;
        if (h < kMinScale * std::max(1.0, std::abs(tau)))
          throw StepFailure("step size underflow at tau = " + num_str(tau));
        continue;
      }
      if (!position_inside(y1)) {
        if (cfg.reflecting_walls) {
          reflect_at_wall(hh, std::move(y1));
          continue;
        }
        throw DomainExit("trajectory left the domain near tau = " + num_str(tau + hh));
      }
      accumulate_clock(y, y1, hh);
      y = std::move(y1);
      k1 = std::move(k7);
      tau = clamped ? target : tau + hh;
      if (clamped)
        h = std::max(h, hh * fac);
      else
        h = hh * fac;
    }
  }
};

}  // namespace

OdeRhs equations_of_motion(const SystemSpec& sys) {
  if (sys.dim <= 0 || !sys.metric.valid() || !sys.scalar_potential.valid())
    throw std::invalid_argument("equations_of_motion: incomplete system");
  const MetricField g = sys.metric;
  const ScalarField V = sys.scalar_potential;
  const SmoothMap A = sys.vector_potential;
  const double m = sys.mass;
  const int d = sys.dim;
  return [=](double, std::span<const double> y, std::span<double> dy) {
    const auto x = y.subspan(0, d);
    const auto v = y.subspan(d, d);
    MetricJet mj;
    mj.m = g.value(x);
    mj.d = g.derivative(x);
    const Tensor3 gamma = christoffel(mj);
    const Mat ginv = lu_inverse(lu_factor(mj.m));
    const Vec dV = V.gradient(x);
    Vec force(d);  // F_jk v^k - d_j V, lower index
    for (int j = 0; j < d; ++j) force[j] = -dV[j];
    if (A.valid()) {
      const Mat ja = A.jacobian(x);  // ja(k, j) = d_j A_k
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) force[j] += (ja(k, j) - ja(j, k)) * v[k];
    }
    for (int i = 0; i < d; ++i) {
      dy[i] = v[i];
      double acc = 0.0;
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) acc -= gamma(j, k, i) * v[j] * v[k];
      double push = 0.0;
      for (int j = 0; j < d; ++j) push += ginv(i, j) * force[j];
      dy[d + i] = acc + push / m;
    }
  };
}

double orbit_energy(const SystemSpec& sys, std::span<const double> x,
                    std::span<const double> v) {
  const Mat g = sys.metric.value(x);
  double kin = 0.0;
  for (int i = 0; i < sys.dim; ++i)
    for (int j = 0; j < sys.dim; ++j) kin += g(i, j) * v[i] * v[j];
  return 0.5 * sys.mass * kin + sys.scalar_potential(x);
}

Trajectory integrate(const SystemSpec& sys, const Vec& x0, const Vec& v0,
                     std::span<const double> t_eval, const IntegratorConfig& cfg,
                     const ScalarField& clock_rate, double clock_start) {
  const int d = sys.dim;
  if (static_cast<int>(x0.size()) != d || static_cast<int>(v0.size()) != d)
    throw ValidationError({"integrate: initial data does not match the dimension"});
  if (t_eval.size() < 1) throw ValidationError({"integrate: empty sample list"});
  for (std::size_t k = 1; k < t_eval.size(); ++k)
    if (!(t_eval[k] > t_eval[k - 1]))
      throw ValidationError({"integrate: sample times must be strictly increasing"});
  if (clock_rate.valid() && clock_rate.n_in() != d)
    throw ValidationError({"integrate: clock rate arity does not match the dimension"});

  const OdeRhs rhs = equations_of_motion(sys);
  const bool police = sys.domain.dim() == static_cast<std::size_t>(d);
  Stepper st{rhs,
             d,
             cfg,
             police ? &sys.domain : nullptr,
             clock_rate.valid() ? &clock_rate : nullptr};
  st.tau = t_eval[0];
  st.y.resize(2 * static_cast<std::size_t>(d));
  std::copy(x0.begin(), x0.end(), st.y.begin());
  std::copy(v0.begin(), v0.end(), st.y.begin() + d);
  st.clock = clock_start;
  st.h = std::max(cfg.initial_step, 1e-12);
  if (police && !st.position_inside(st.y))
    throw DomainExit("integrate: initial position lies outside the domain");

  Trajectory out;
  out.s.reserve(t_eval.size());
  out.x.reserve(t_eval.size());
  out.v.reserve(t_eval.size());
  if (clock_rate.valid()) out.clock.reserve(t_eval.size());
  auto record = [&] {
    out.s.push_back(st.tau);
    out.x.emplace_back(st.y.begin(), st.y.begin() + d);
    out.v.emplace_back(st.y.begin() + d, st.y.end());
    if (clock_rate.valid()) out.clock.push_back(st.clock);
  };
  record();
  for (std::size_t k = 1; k < t_eval.size(); ++k) {
    st.advance_to(t_eval[k]);
    record();
  }
  return out;
}

Vec pseudotime_map(const ScalarField& f, const Trajectory& traj, double t0) {
  if (!f.valid()) throw std::invalid_argument("pseudotime_map: missing time scale");
  Vec t(traj.size());
  if (traj.size() == 0) return t;
  t[0] = t0;
  auto rate = [&](std::size_t k, double* val, double* slope) {
    *val = f(traj.x[k]);
    const Vec g = f.gradient(traj.x[k]);
    *slope = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) *slope += g[i] * traj.v[k][i];
  };
  double f0, d0;
  rate(0, &f0, &d0);
  for (std::size_t k = 1; k < traj.size(); ++k) {
    double f1, d1;
    rate(k, &f1, &d1);
    const double h = traj.s[k] - traj.s[k - 1];
    t[k] = t[k - 1] + 0.5 * h * (f0 + f1) + h * h / 12.0 * (d0 - d1);
    f0 = f1;
    d0 = d1;
  }
  return t;
}

CorrespondenceReport correspondence_check(const SystemSpec& init, const TransformSpec& tr,
                                          const Vec& x0, const Vec& v0, double s_span,
                                          std::size_t n_samples, const IntegratorConfig& cfg_t,
                                          const IntegratorConfig& cfg_s, double energy_rel_tol) {
  const int d = init.dim;
  if (!tr.inverse_map.valid())
    throw ValidationError({"correspondence: transform must supply an inverse map"});
  if (n_samples < 2 || !(s_span > 0.0))
    throw ValidationError({"correspondence: need a positive span and >= 2 samples"});

  const double e_meas = orbit_energy(init, x0, v0);
  const double e_scale = std::max({std::abs(e_meas), std::abs(tr.energy), 1e-12});
  if (std::abs(e_meas - tr.energy) > energy_rel_tol * e_scale)
    throw EnergyMismatch("declared transform energy " + num_str(tr.energy) +
                         " does not match the measured orbit energy " + num_str(e_meas));

  SystemSpec sys_s;
  sys_s.dim = d;
  sys_s.mass = init.mass;
  sys_s.hbar = 0.0;
  sys_s.metric = pull_metric(init, tr);
  sys_s.vector_potential = pull_vector_potential(init, tr);
  sys_s.scalar_potential = classical_potential(init, tr);
  sys_s.domain = tr.domain;

  // Seed the s-frame run: Q0 = Q(q0), Q' = e^{-1} qdot f.
  const Vec Q0 = tr.inverse_map(x0);
  const double fQ0 = tr.time_scale(Q0);
  if (!(fQ0 > 0.0))
    throw NonPositiveTimeScale("correspondence: f(Q0) = " + num_str(fQ0));
  const Mat e0 = tr.space_map.jacobian(Q0);
  Vec rhs0(d);
  for (int i = 0; i < d; ++i) rhs0[i] = v0[i] * fQ0;
  Vec Qdot0;
  try {
    Qdot0 = lu_solve(lu_factor(e0), rhs0);
  } catch (const std::runtime_error&) {
    throw DegenerateFrame("correspondence: frame is singular at the initial point");
  }

  Vec s_eval(n_samples);
  for (std::size_t k = 0; k < n_samples; ++k)
    s_eval[k] = s_span * static_cast<double>(k) / static_cast<double>(n_samples - 1);

  const Trajectory traj_s = integrate(sys_s, Q0, Qdot0, s_eval, cfg_s, tr.time_scale, 0.0);
  const Trajectory traj_t = integrate(init, x0, v0, traj_s.clock, cfg_t);

  CorrespondenceReport rep;
  rep.s = traj_s.s;
  rep.t = traj_s.clock;
  rep.Q = traj_s.x;
  rep.Qdot = traj_s.v;
  rep.energy = e_meas;
  rep.q_direct = traj_t.x;
  rep.v_direct = traj_t.v;
  rep.q_mapped.resize(n_samples);
  rep.v_mapped.resize(n_samples);

  const double E_t0 = orbit_energy(init, traj_t.x[0], traj_t.v[0]);
  const double H_s0 = orbit_energy(sys_s, traj_s.x[0], traj_s.v[0]);
  for (std::size_t k = 0; k < n_samples; ++k) {
    const Vec& Q = traj_s.x[k];
    const Vec& Qd = traj_s.v[k];
    const double fQ = tr.time_scale(Q);
    const Mat e = tr.space_map.jacobian(Q);
    Vec q = tr.space_map(Q);
    Vec vq(d, 0.0);
    for (int i = 0; i < d; ++i) {
      for (int lam = 0; lam < d; ++lam) vq[i] += e(i, lam) * Qd[lam];
      vq[i] /= fQ;
    }
    for (int i = 0; i < d; ++i) {
      rep.max_position_error = std::max(rep.max_position_error, std::abs(q[i] - traj_t.x[k][i]));
      rep.max_velocity_error = std::max(rep.max_velocity_error, std::abs(vq[i] - traj_t.v[k][i]));
    }
    rep.q_mapped[k] = std::move(q);
    rep.v_mapped[k] = std::move(vq);
    rep.energy_drift_direct =
        std::max(rep.energy_drift_direct,
                 std::abs(orbit_energy(init, traj_t.x[k], traj_t.v[k]) - E_t0));
    rep.energy_drift_mapped =
        std::max(rep.energy_drift_mapped,
                 std::abs(orbit_energy(sys_s, traj_s.x[k], traj_s.v[k]) - H_s0));
  }
  return rep;
}

}  // namespace nst
