#pragma once
// Differential geometry engine: metric/frame fields with exact (or
// finite-difference) jets, Christoffel symbols, Riemann and Cartan curvature,
// and the torsion of the nonholonomic spacetime frame
//
//     E^I_Lam = [ f(Q)      0      ]        (time row I = 0,
//               [  0     e^i_lam   ]         space block i = 1..D)
//
// Index conventions used throughout (all storage derivative-index-first):
//   * connections:  gamma(a, b, c)      = Gamma_ab^c
//   * d connection: dgamma(s, a, b, c)  = d_s Gamma_ab^c
//   * curvature:    R(m, n, l, k)       = d_m Gamma_nl^k - d_n Gamma_ml^k
//                                         + Gamma_nl^s Gamma_ms^k
//                                         - Gamma_ml^s Gamma_ns^k
//   * Ricci:        ric(n, l) = R(m, n, l, m), scalar = ginv(n,l) ric(n,l)
//
// Spacetime objects live on D+1 indices with index 0 = time; nothing depends
// on t, so every time derivative is identically zero.

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "errors.hpp"
#include "smoothmap.hpp"

namespace nst {

// Value, first and second derivatives of a square matrix field.
//   d(k, i, j)     = d_k m_ij
//   dd(l, k, i, j) = d_l d_k m_ij
struct MatrixJet {
  Mat m;
  Tensor3 d;
  Tensor4 dd;
};

// Square matrix field over n = dim coordinates (metrics, frame blocks).
class MatrixField {
 public:
  MatrixField() = default;

  // entries are row-major, entries.size() == dim*dim.
  static MatrixField from_expressions(int dim, std::vector<Expr> entries);
  static MatrixField from_callable(int dim, std::function<Mat(std::span<const double>)> fn,
                                   double fd_step = 1e-3);
  static MatrixField constant(const Mat& m);
  static MatrixField euclidean(int dim);

  bool valid() const { return m_.valid(); }
  int dim() const { return dim_; }
  bool exact() const { return m_.exact(); }

  Mat value(std::span<const double> x) const;
  // d(k, i, j) = d_k m_ij (first derivatives only; cheaper than jet()).
  Tensor3 derivative(std::span<const double> x) const;
  MatrixJet jet(std::span<const double> x) const;

  // Row-major entry trees when expression-backed, nullptr otherwise.
  const std::vector<Expr>* expressions() const { return m_.expressions(); }

 private:
  int dim_ = 0;
  SmoothMap m_;
};

using MetricField = MatrixField;
using MetricJet = MatrixJet;

// ---- jet utilities ----

// Entry (i, j) of a matrix jet packaged as a Jet2 over the field coordinates.
Jet2 entry_jet(const MatrixJet& mj, std::size_t i, std::size_t j);
void set_entry(MatrixJet& mj, std::size_t i, std::size_t j, const Jet2& v);

// Jet of g(q(Q)) with respect to Q (chain rule; exact when both inputs are).
MatrixJet compose_jet(const MatrixField& g, const SmoothMap& map, std::span<const double> Q);
Jet2 compose_scalar_jet(const ScalarField& v, const SmoothMap& map, std::span<const double> Q);

// ghat_lam_mu = e^i_lam e^j_mu g_ij, with g already expressed at q(Q).
MatrixJet pulled_metric_jet(const MatrixJet& e, const MatrixJet& g_at_q);

// ---- Levi-Civita machinery ----

// Gamma_ab^c = 1/2 g^cs (d_a g_sb + d_b g_sa - d_s g_ab). Throws
// SingularMetric when g is not positive definite.
Tensor3 christoffel(const MetricJet& g);
Tensor3 christoffel(const MetricField& g, std::span<const double> x);
// Also fills dgamma(s, a, b, c) = d_s Gamma_ab^c using
// d g^{-1} = -g^{-1} (d g) g^{-1}.
void christoffel_with_derivative(const MetricJet& g, Tensor3* gamma, Tensor4* dgamma);

Tensor4 riemann_tensor(const Tensor3& gamma, const Tensor4& dgamma);
Mat ricci_tensor(const Tensor4& riemann);
double scalar_curvature(const Mat& ginv, const Tensor3& gamma, const Tensor4& dgamma);

// Riemann curvature scalar of the Levi-Civita connection of g at x.
double riemann_scalar(const MetricField& g, std::span<const double> x);

// ---- frames, holonomy, torsion ----

// e^i_lam = d q^i / d Q^lam. Symbolic when the map is expression-backed.
MatrixField holonomic_frame(const SmoothMap& map);

// max_{i, lam<mu} |d_mu e^i_lam - d_lam e^i_mu|; ~0 certifies local holonomy.
double schwarz_residual(const MatrixField& e, std::span<const double> x);
double schwarz_residual(const SmoothMap& map, std::span<const double> x);

// The block frame of the combined space/time transformation. Keeps the space
// map around (when it exists) so position-dependent initial metrics can be
// pulled back to Q coordinates.
class FrameField {
 public:
  FrameField() = default;

  static FrameField from_space_map(const SmoothMap& q, ScalarField f);
  // Raw coefficient field, possibly nonholonomic; no space map available.
  static FrameField from_components(MatrixField e, ScalarField f);

  bool valid() const { return e_.valid(); }
  int dim() const { return e_.dim(); }
  const ScalarField& time_scale() const { return f_; }
  const MatrixField& space_block() const { return e_; }
  const SmoothMap* space_map() const { return map_ ? &*map_ : nullptr; }

  // (D+1)x(D+1) matrices; throw DegenerateFrame when f <= 0 or e singular.
  Mat vielbein(std::span<const double> Q) const;
  Mat inverse_vielbein(std::span<const double> Q) const;

 private:
  MatrixField e_;
  ScalarField f_;
  std::optional<SmoothMap> map_;
};

// Teleparallel connection Gamma_LamMu^Nu = E_I^Nu d_Lam E^I_Mu of the frame,
// on D+1 spacetime indices. Identically zero rows for Lam = 0.
Tensor3 cartan_connection(const FrameField& frame, std::span<const double> Q);

// S_lam = S_lamMu^Mu with S_LamMu^Nu = 1/2 (Gamma_LamMu^Nu - Gamma_MuLam^Nu);
// only the spatial components survive for the block frame.
Vec torsion_contracted(const FrameField& frame, std::span<const double> Q);

// Which inverse metric contracts S_lam S_mu in the audit below. The spacetime
// metric G = diag(f^2, ghat) restricts to ghat on spatial covectors; the
// alternative g^(f)-contraction is kept for the convention experiment.
enum class TorsionSquareMetric { kSpacetime, kTransformed };

// Everything the geometric form needs in one evaluation: Cartan and Riemann curvature
// scalars of the spacetime metric G = E^T diag(1, g_init) E (eta_tt = +1),
// the contracted torsion and its square.
struct CartanAudit {
  double f = 0.0;
  double cartan_scalar = 0.0;     // curvature scalar of Gamma_LC(G) + contortion
  double riemann_scalar = 0.0;    // curvature scalar of Gamma_LC(G)
  Vec torsion;                    // S_lam, spatial
  double torsion_square = 0.0;    // per the requested contraction
  Mat ghat;                       // e^T (g_init at q(Q)) e
};

CartanAudit cartan_audit(const FrameField& frame, const MetricField& g_init,
                         std::span<const double> Q,
                         TorsionSquareMetric ts = TorsionSquareMetric::kSpacetime,
                         double conformal_exponent = -1.0);

double cartan_scalar(const FrameField& frame, const MetricField& g_init,
                     std::span<const double> Q);
double spacetime_riemann_scalar(const FrameField& frame, const MetricField& g_init,
                                std::span<const double> Q);

}  // namespace nst
