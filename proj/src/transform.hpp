#pragma once
// Transformation laws between the initial (q, t) system and the transformed
// (Q, s) system: metric pull-back with the conformal time factor, covariant
// vector-potential pull-back, the classical potential f (V - E), and the
// hbar^2 quantum correction in both its direct (Christoffel) and geometric
// (curvature/torsion) forms.

#include <optional>
#include <string>
#include <vector>

#include "diffgeo.hpp"

namespace nst {

struct DomainBox {
  Vec lo, hi;

  std::size_t dim() const { return lo.size(); }
  bool contains(std::span<const double> x, double pad = 0.0) const;
  // Uniform interior lattice, per_dim points per axis; never touches a face.
  std::vector<Vec> grid(int per_dim) const;
};

struct SystemSpec {
  int dim = 0;
  double mass = 1.0;
  double hbar = 1.0;  // 0 selects the purely classical system
  MetricField metric;
  SmoothMap vector_potential;    // D components over q; invalid() means A = 0
  ScalarField scalar_potential;  // over q
  DomainBox domain;

  bool has_vector_potential() const { return vector_potential.valid(); }
  // Structural problems (arity mismatches, bad scalars); empty when sound.
  std::vector<std::string> validate() const;
};

struct TransformSpec {
  SmoothMap space_map;    // q(Q)
  SmoothMap inverse_map;  // Q(q); invalid() if not supplied
  ScalarField time_scale; // f(Q), positive
  double energy = 0.0;    // E^(i) of the initial orbit
  int conformal_exponent = -1;  // g^(f) = f^(exponent) e^T g e
  DomainBox domain;             // evaluation box in Q

  std::vector<std::string> validate(int dim) const;
};

// The two readings of the contracted Christoffel object Gamma^(f)lam mu_lam
// entering the direct potential. kRaisedLower (g^(f)lam sig Gamma_sig lam^mu)
// is the one the direct/geometric equivalence validates; kContractedUpper
// (g^(f)mu nu Gamma_lam nu^lam) is retained for the convention experiment.
enum class ChristoffelReading { kContractedUpper, kRaisedLower };

const char* to_string(ChristoffelReading r);
const char* to_string(TorsionSquareMetric m);

struct TransformedSystem {
  SystemSpec system;               // final-frame system (full V^(f) when hbar > 0)
  ScalarField quantum_correction;  // V^(qu)(Q) alone
  // The inputs that produced this system, kept for downstream experiments.
  SystemSpec initial;
  TransformSpec transform;
  ChristoffelReading reading = ChristoffelReading::kRaisedLower;
};

// g^(f) = f^exponent e^T (g compose q) e, per the conformal_exponent flag.
MetricField pull_metric(const SystemSpec& init, const TransformSpec& tr);

// Covariant pull-back A_lam = e^i_lam A_i; no factor of f. Invalid input A
// yields an invalid (absent) output.
SmoothMap pull_vector_potential(const SystemSpec& init, const TransformSpec& tr);

// f (V compose q - E).
ScalarField classical_potential(const SystemSpec& init, const TransformSpec& tr);

// Direct form of the full transformed potential (classical part included):
// the hbar^2 terms written out in Christoffel symbols of g^(f) and
// derivatives of f.
ScalarField quantum_potential_direct(
    const SystemSpec& init, const TransformSpec& tr,
    ChristoffelReading reading = ChristoffelReading::kRaisedLower);

// Geometric form of the quantum correction V^(qu) alone: torsion square plus
// the difference between the Riemann-Cartan and Levi-Civita scalar
// curvatures of the (D+1)-dimensional spacetime metric diag(f^2, g-hat).
ScalarField quantum_potential_geometric(
    const SystemSpec& init, const TransformSpec& tr,
    TorsionSquareMetric ts = TorsionSquareMetric::kSpacetime);

TransformedSystem transform_system(
    const SystemSpec& init, const TransformSpec& tr,
    ChristoffelReading reading = ChristoffelReading::kRaisedLower);

// Sampled preconditions for the pair (positivity of f, Schwarz holonomy,
// inverse consistency, metric definiteness). Empty when everything holds.
std::vector<std::string> transform_validation_issues(const SystemSpec& init,
                                                     const TransformSpec& tr,
                                                     int samples_per_dim = 4);

}  // namespace nst
