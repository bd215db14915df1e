#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "errors.hpp"
#include "transform.hpp"

using namespace nst;

namespace {

const std::vector<std::string> kq1 = coordinate_names("q", 1);
const std::vector<std::string> kQ1 = coordinate_names("Q", 1);

// Radial Coulomb system, -alpha/q with alpha = 1.
SystemSpec coulomb() {
  SystemSpec s;
  s.dim = 1;
  s.metric = MetricField::from_expressions(1, {parse_expression("1", kq1)});
  s.scalar_potential = ScalarField::from_expression(parse_expression("-1/q1", kq1), 1);
  s.domain = DomainBox{{1e-4}, {20.0}};
  return s;
}

// The square-root chart q = Q^2 with pseudotime rate f = 4 Q^2.
TransformSpec square_chart(double energy) {
  TransformSpec t;
  t.space_map = SmoothMap::from_expressions({parse_expression("Q1^2", kQ1)}, 1);
  t.inverse_map = SmoothMap::from_expressions({parse_expression("sqrt(q1)", kq1)}, 1);
  t.time_scale = ScalarField::from_expression(parse_expression("4*Q1^2", kQ1), 1);
  t.energy = energy;
  t.domain = DomainBox{{0.01}, {4.5}};
  return t;
}

}  // namespace

TEST_CASE("pulled metric under both conformal exponents") {
  const SystemSpec init = coulomb();
  // ghat = (dq/dQ)^2 = 4 Q^2; f = 4 Q^2. At Q = 1: ghat = f = 4.
  TransformSpec tr = square_chart(-0.125);
  tr.conformal_exponent = -1;
  CHECK(pull_metric(init, tr).value(std::vector<double>{1.0})(0, 0) == doctest::Approx(1.0));
  CHECK(pull_metric(init, tr).value(std::vector<double>{1.7})(0, 0) == doctest::Approx(1.0));
  tr.conformal_exponent = +1;
  CHECK(pull_metric(init, tr).value(std::vector<double>{1.0})(0, 0) == doctest::Approx(16.0));
}

TEST_CASE("vector potential pulls back with the Jacobian") {
  SystemSpec init = coulomb();
  const double a0 = 0.7;
  init.vector_potential =
      SmoothMap::from_expressions({parse_expression("0.7", kq1)}, 1);
  const TransformSpec tr = square_chart(0.0);
  const SmoothMap a = pull_vector_potential(init, tr);
  const double Q = 1.3;
  CHECK(a(std::vector<double>{Q})[0] == doctest::Approx(2.0 * Q * a0));
}

TEST_CASE("vector potential pullback in polar coordinates") {
  const auto q2 = coordinate_names("q", 2);
  const auto Q2 = coordinate_names("Q", 2);
  SystemSpec init;
  init.dim = 2;
  init.metric = MetricField::euclidean(2);
  init.scalar_potential = ScalarField::zero(2);
  init.vector_potential = SmoothMap::from_expressions(
      {parse_expression("0", q2), parse_expression("0.7", q2)}, 2);
  init.domain = DomainBox{{-5, -5}, {5, 5}};
  TransformSpec tr;  // (r, phi) -> (r cos phi, r sin phi)
  tr.space_map = SmoothMap::from_expressions(
      {parse_expression("Q1*cos(Q2)", Q2), parse_expression("Q1*sin(Q2)", Q2)}, 2);
  tr.time_scale = ScalarField::from_expression(parse_expression("1", Q2), 2);
  tr.domain = DomainBox{{0.5, 0.1}, {3.0, 1.2}};
  const SmoothMap a = pull_vector_potential(init, tr);
  const double r = 2.1, phi = 0.8;
  const Vec av = a(std::vector<double>{r, phi});
  CHECK(av[0] == doctest::Approx(0.7 * std::sin(phi)));      // A_r
  CHECK(av[1] == doctest::Approx(0.7 * r * std::cos(phi)));  // A_phi
}

TEST_CASE("classical potential f(V - E): Coulomb becomes an oscillator") {
  const SystemSpec init = coulomb();
  const double E = -0.125;
  const ScalarField vf = classical_potential(init, square_chart(E));
  for (double Q : {0.3, 1.0, 2.4})
    CHECK(vf(std::vector<double>{Q}) == doctest::Approx(-4.0 - 4.0 * E * Q * Q));
}

TEST_CASE("quantum correction vanishes identically in D = 2") {
  const auto Q2 = coordinate_names("Q", 2);
  SystemSpec init;
  init.dim = 2;
  init.metric = MetricField::euclidean(2);
  init.scalar_potential = ScalarField::zero(2);
  init.domain = DomainBox{{-4, -4}, {4, 4}};
  TransformSpec tr;
  tr.space_map = SmoothMap::from_expressions(
      {parse_expression("Q1 + 0.1*Q2^2", Q2), parse_expression("Q2 + 0.2*sin(Q1)", Q2)}, 2);
  tr.time_scale = ScalarField::from_expression(parse_expression("1 + 0.3*Q1^2", Q2), 2);
  tr.domain = DomainBox{{-1, -1}, {1, 1}};
  const TransformedSystem ts = transform_system(init, tr);
  for (const Vec& Q : tr.domain.grid(3))
    CHECK(std::abs(ts.quantum_correction(Q)) < 1e-10);
}

TEST_CASE("Coulomb quantum correction is 3 hbar^2 / (8 m Q^2)") {
  const SystemSpec init = coulomb();
  const TransformSpec tr = square_chart(-0.125);
  const TransformedSystem ts = transform_system(init, tr);
  const ScalarField vgeo = quantum_potential_geometric(init, tr);
  for (double Q : {0.4, 1.0, 1.9, 3.6}) {
    const double expected = 0.375 / (Q * Q);
    CHECK(ts.quantum_correction(std::vector<double>{Q}) ==
          doctest::Approx(expected).epsilon(1e-12));
    CHECK(vgeo(std::vector<double>{Q}) == doctest::Approx(expected).epsilon(1e-12));
  }
  // Full transformed potential = oscillator + correction.
  const double Q = 1.3;
  CHECK(ts.system.scalar_potential(std::vector<double>{Q}) ==
        doctest::Approx(-4.0 + 0.5 * Q * Q + 0.375 / (Q * Q)));
}

TEST_CASE("the rejected contraction convention visibly disagrees in D = 3") {
  // With one spatial index the two contractions collapse to the same scalar,
  // so D = 1 cannot distinguish them ...
  {
    const SystemSpec init = coulomb();
    const TransformSpec tr = square_chart(-0.125);
    const ScalarField good = quantum_potential_direct(init, tr);
    const ScalarField bad =
        quantum_potential_direct(init, tr, ChristoffelReading::kContractedUpper);
    const std::vector<double> Q{1.0};
    CHECK(good(Q) == doctest::Approx(bad(Q)).epsilon(1e-14));
  }
  // ... but an anisotropic D = 3 chart does.
  SystemSpec init;
  init.dim = 3;
  init.metric = MetricField::euclidean(3);
  init.scalar_potential = ScalarField::zero(3);
  init.domain = DomainBox{{-3, -3, -3}, {3, 3, 3}};
  TransformSpec tr;
  const auto Q3 = coordinate_names("Q", 3);
  tr.space_map = SmoothMap::from_expressions(
      {parse_expression("Q1 + 0.2*Q2^2", Q3), parse_expression("Q2 + 0.3*sin(Q1)", Q3),
       parse_expression("Q3 + 0.2*Q1*Q2", Q3)},
      3);
  tr.time_scale =
      ScalarField::from_expression(parse_expression("exp(0.4*Q1 + 0.3*Q3)", Q3), 3);
  tr.domain = DomainBox{{-1, -1, -1}, {1, 1, 1}};
  const ScalarField good = quantum_potential_direct(init, tr);
  const ScalarField bad =
      quantum_potential_direct(init, tr, ChristoffelReading::kContractedUpper);
  const std::vector<double> Q{0.4, -0.3, 0.5};
  const double rel =
      std::abs(bad(Q) - good(Q)) / std::max({std::abs(good(Q)), std::abs(bad(Q)), 1e-15});
  CHECK(rel > 1e-3);
}

TEST_CASE("structural validation collects issues") {
  SystemSpec s;  // dim = 0, nothing valid
  const auto issues = s.validate();
  CHECK(!issues.empty());

  TransformSpec t;
  auto ti = t.validate(1);
  CHECK(!ti.empty());  // missing map, time scale, domain

  // Arity mismatch: a 2-argument map on a 1-dimensional system.
  TransformSpec t2 = square_chart(0.0);
  t2.space_map = SmoothMap::from_expressions(
      {parse_expression("Q1 + Q2", coordinate_names("Q", 2))}, 2);
  CHECK(!t2.validate(1).empty());
}

TEST_CASE("sampled validation catches a wrong inverse and a sign-flipping f") {
  const SystemSpec init = coulomb();
  CHECK(transform_validation_issues(init, square_chart(-0.125)).empty());

  TransformSpec bad_inv = square_chart(-0.125);
  bad_inv.inverse_map = SmoothMap::from_expressions({parse_expression("q1", kq1)}, 1);
  bool mentioned = false;
  for (const auto& msg : transform_validation_issues(init, bad_inv))
    if (msg.find("inverse") != std::string::npos) mentioned = true;
  CHECK(mentioned);

  TransformSpec bad_f = square_chart(-0.125);
  bad_f.time_scale = ScalarField::from_expression(parse_expression("Q1 - 1", kQ1), 1);
  bool f_issue = false;
  for (const auto& msg : transform_validation_issues(init, bad_f))
    if (msg.find("time scale") != std::string::npos || msg.find("positive") != std::string::npos)
      f_issue = true;
  CHECK(f_issue);
}

TEST_CASE("domain boxes: membership and interior grids") {
  const DomainBox box{{0.0, -1.0}, {2.0, 1.0}};
  CHECK(box.contains(std::vector<double>{1.0, 0.0}));
  CHECK_FALSE(box.contains(std::vector<double>{2.5, 0.0}));
  CHECK(box.contains(std::vector<double>{2.2, 0.0}, 0.5));  // padded
  const auto pts = box.grid(3);
  CHECK(pts.size() == 9);
  for (const Vec& p : pts) CHECK(box.contains(p));
}
