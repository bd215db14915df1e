#pragma once
// Classical dynamics: the geodesic + force equations of motion, an adaptive
// Dormand-Prince integrator with reflecting walls and a physical-clock
// quadrature, and the t-frame vs s-frame correspondence check.

#include <cstddef>
#include <functional>

#include "transform.hpp"

namespace nst {

enum class OdeMethod { kDopri5, kImplicitMidpoint };

struct IntegratorConfig {
  OdeMethod method = OdeMethod::kDopri5;
  double rel_tol = 1e-10;          // Dormand-Prince error control
  double abs_tol = 1e-12;
  double initial_step = 1e-3;
  double fixed_step = 1e-3;        // implicit midpoint only
  std::size_t max_steps = 2'000'000;
  // Reflect at the domain faces (billiard wall) instead of raising DomainExit.
  bool reflecting_walls = false;
};

// First-order state y = (x, v); dy = (v, a).
using OdeRhs = std::function<void(double, std::span<const double>, std::span<double>)>;

// a^i = -Gamma^i_jk v^j v^k + (1/m) g^ij (F_jk v^k - d_j V) with F_jk the
// curl of the covariant vector potential.
OdeRhs equations_of_motion(const SystemSpec& sys);

// E = m/2 g_ij v^i v^j + V(x); the magnetic force does no work.
double orbit_energy(const SystemSpec& sys, std::span<const double> x,
                    std::span<const double> v);

struct Trajectory {
  Vec s;               // independent-variable samples (t or s, whichever frame)
  std::vector<Vec> x;  // positions
  std::vector<Vec> v;  // velocities
  Vec clock;           // accumulated physical time; empty unless a clock rate was given
  std::size_t size() const { return s.size(); }
};

// Integrate sys from (x0, v0), sampling exactly at t_eval (strictly
// increasing; the first entry is the initial time and gets the initial
// state). The domain box polices every accepted step: leaving it raises
// DomainExit, or reflects when cfg.reflecting_walls is set. When clock_rate
// is valid, t(s) = integral clock_rate(x(s)) ds is accumulated per accepted
// step with cubic-Hermite quadrature and sampled into Trajectory::clock.
Trajectory integrate(const SystemSpec& sys, const Vec& x0, const Vec& v0,
                     std::span<const double> t_eval, const IntegratorConfig& cfg = {},
                     const ScalarField& clock_rate = {}, double clock_start = 0.0);

// t(s_k) along an s-frame trajectory reconstructed from the samples alone
// (cubic-Hermite quadrature of f between samples, df/ds = grad f . Q').
// Coarser than the integrated clock; serves as an independent cross-check.
Vec pseudotime_map(const ScalarField& f, const Trajectory& traj, double t0 = 0.0);

struct CorrespondenceReport {
  Vec s;                       // pseudotime samples
  Vec t;                       // reconstructed physical times t(s)
  std::vector<Vec> Q;          // s-frame orbit
  std::vector<Vec> Qdot;
  std::vector<Vec> q_direct;   // initial-frame orbit at t
  std::vector<Vec> v_direct;
  std::vector<Vec> q_mapped;   // q(Q(s)) at the same physical times
  std::vector<Vec> v_mapped;   // e(Q) Q' / f(Q)
  double energy = 0.0;               // measured initial-frame energy of (x0, v0)
  double max_position_error = 0.0;   // max_k |q_mapped - q_direct|_inf
  double max_velocity_error = 0.0;
  double energy_drift_direct = 0.0;  // max_k |E(t_k) - E(t_0)|, initial frame
  double energy_drift_mapped = 0.0;  // max_k |H_s(s_k) - H_s(0)|, transformed frame
};

// Runs the classical transformed system in s, reconstructs the physical
// clock, runs the initial system at exactly those times, and compares the
// mapped orbit against the direct one. Requires tr.inverse_map (to seed the
// s-frame initial data). Throws EnergyMismatch when the measured energy of
// (x0, v0) differs from tr.energy by more than energy_rel_tol relatively.
CorrespondenceReport correspondence_check(const SystemSpec& init, const TransformSpec& tr,
                                          const Vec& x0, const Vec& v0, double s_span,
                                          std::size_t n_samples,
                                          const IntegratorConfig& cfg_t = {},
                                          const IntegratorConfig& cfg_s = {},
                                          double energy_rel_tol = 1e-6);

}  // namespace nst
