#pragma once
// One-dimensional quantum checks. The Hamiltonian
//
//   H = -(hbar^2 / 2m) g^{-1/4} d g^{-1/2} d g^{-1/4} + V
//
// acts on flat-measure wavefunctions phi = g^{1/4} psi, so a symmetric
// tridiagonal matrix on a uniform Dirichlet grid captures it exactly to
// O(h^2). Spectra come from Sturm bisection, resolvents from shifted LDL^T
// solves. A covariant vector potential is gauged away by a phase in one
// dimension and never enters the spectral matrix; the resolvent check
// rejects it since the kernel phase would not cancel.

#include <array>
#include <cstddef>

#include "transform.hpp"

namespace nst {

// n interior nodes x_j = x_min + (j+1) h, h = (x_max - x_min)/(n+1), with
// Dirichlet walls at x_min and x_max.
struct Grid1D {
  double x_min = 0.0;
  double x_max = 1.0;
  std::size_t n = 0;

  double h() const { return (x_max - x_min) / static_cast<double>(n + 1); }
  double node(std::size_t j) const { return x_min + static_cast<double>(j + 1) * h(); }
};

struct Grid1DOperator {
  Grid1D grid;
  Vec diag;    // n
  Vec off;     // n - 1
  Vec weight;  // g^{1/4} at the nodes: phi = weight . psi
};

// Midpoint-flux discretization: with c = g^{-1/2} at cell midpoints and
// w = g^{-1/4} at nodes,
//   diag_j = (hbar^2/2m) w_j^2 (c_{j-1/2} + c_{j+1/2}) / h^2 + V(x_j)
//   off_j  = -(hbar^2/2m) w_j c_{j+1/2} w_{j+1} / h^2.
// Requires sys.dim == 1 (UnsupportedDimension otherwise) and hbar > 0.
Grid1DOperator discretize_hamiltonian(const SystemSpec& sys, const Grid1D& grid);

// Number of eigenvalues strictly below lambda (Sturm sequence count).
std::size_t sturm_count_below(const Grid1DOperator& op, double lambda);

// The m smallest eigenvalues, ascending (Sturm bisection, ~1e-14 relative).
Vec lowest_eigenvalues(const Grid1DOperator& op, std::size_t m);

// The eigenvalue closest to target.
double eigenvalue_nearest(const Grid1DOperator& op, double target);

// x with (T - shift I) x = rhs; SingularLinearSolve when the shifted matrix
// is numerically singular (shift too close to an eigenvalue).
Vec solve_shifted(const Grid1DOperator& op, double shift, std::span<const double> rhs);

struct ZeroModeReport {
  Vec initial_levels;  // E_1..E_K of the initial-frame operator
  Vec offsets;         // |eigenvalue of Hhat(E_k) nearest zero| per level
};

// Builds Hhat(E_k) = f (H - E_k) + V^(qu) on the transformed grid for each of
// the lowest n_levels initial eigenvalues and reports how far its spectrum is
// from the predicted zero mode. With include_quantum_correction = false the
// V^(qu) term is dropped, which should visibly break the mapping.
ZeroModeReport zero_mode_spectral_check(const SystemSpec& init, const TransformSpec& tr,
                                        const Grid1D& grid_init, const Grid1D& grid_transformed,
                                        std::size_t n_levels,
                                        bool include_quantum_correction = true);

struct ResolventPoint {
  double q_a = 0.0, q_b = 0.0;  // probe pair, initial coordinates
  double direct = 0.0;          // flat-measure kernel G_t(q_a, q_b; E)
  double mapped = 0.0;          // endpoint prefactors x G_s(Q_a, Q_b)
  double rel_error = 0.0;
};

struct ResolventReport {
  std::vector<ResolventPoint> points;
  double max_rel_error = 0.0;
  // max over solves of |(T - shift) x - b|_inf / |b|_inf: a solver identity
  // that must hold to near machine precision regardless of physics.
  double max_solve_residual = 0.0;
  double spectral_gap = 0.0;  // lambda_0(H) - E, must be positive
};

// Fixed-energy Duru-Kleinert resolvent identity: for E below the spectrum of H,
//   G_{H-E}(q_a, q_b) = prod_{e in {a,b}} [ f(Q_e)^{1/4 + delta}
//                        g(q_e)^{1/4} g^(f)(Q_e)^{-1/4} ] G_Hhat(Q_a, Q_b)
// with both kernels taken in flat measure on their own grids. delta = 0 is
// the physical exponent; a deliberate delta != 0 probes the sensitivity of
// the identity. Throws SpectrumOverlap when E is not strictly below the
// spectrum (or Hhat fails to be positive).
ResolventReport resolvent_dk_check(const SystemSpec& init, const TransformSpec& tr,
                                   const Grid1D& grid_init, const Grid1D& grid_transformed,
                                   double probe_energy,
                                   std::span<const std::array<double, 2>> probe_pairs,
                                   double prefactor_delta = 0.0);

}  // namespace nst
