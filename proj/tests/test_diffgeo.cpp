#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "diffgeo.hpp"
#include "errors.hpp"
#include "oracles.hpp"

using namespace nst;

namespace {
Expr parse1(const std::string& s, const char* prefix = "Q", int dim = 1) {
  return parse_expression(s, coordinate_names(prefix, dim));
}
}  // namespace

TEST_CASE("1D Christoffel of g = 16 Q^4") {
  // Gamma = g'/(2g) = 2/Q, so exactly 2 at Q = 1.
  const MetricField g = MetricField::from_expressions(1, {parse1("16*Q1^4")});
  const Tensor3 gamma = christoffel(g, std::vector<double>{1.0});
  CHECK(gamma(0, 0, 0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("polar-coordinate Christoffels") {
  const auto vars = coordinate_names("Q", 2);  // Q1 = r, Q2 = phi
  const MetricField g = MetricField::from_expressions(
      2, {parse_expression("1", vars), parse_expression("0", vars), parse_expression("0", vars),
          parse_expression("Q1^2", vars)});
  const std::vector<double> x{2.0, 0.7};
  const Tensor3 gamma = christoffel(g, x);
  CHECK(gamma(1, 1, 0) == doctest::Approx(-2.0));       // Gamma^r_{phi phi} = -r
  CHECK(gamma(0, 1, 1) == doctest::Approx(0.5));        // Gamma^phi_{r phi} = 1/r
  CHECK(gamma(1, 0, 1) == doctest::Approx(0.5));        // symmetric in the lower pair
  CHECK(std::abs(gamma(0, 0, 0)) < 1e-14);
}

TEST_CASE("scalar curvature of the 2-sphere is 2/a^2") {
  for (double a : {1.0, 3.0}) {
    const auto vars = coordinate_names("Q", 2);  // theta, phi
    const std::string a2 = std::to_string(a * a);
    const MetricField g = MetricField::from_expressions(
        2, {parse_expression(a2, vars), parse_expression("0", vars), parse_expression("0", vars),
            parse_expression(a2 + "*sin(Q1)^2", vars)});
    const double r = riemann_scalar(g, std::vector<double>{1.1, 0.3});
    CHECK(r == doctest::Approx(2.0 / (a * a)).epsilon(1e-10));
  }
}

TEST_CASE("metric jets agree with finite differences") {
  const auto vars = coordinate_names("Q", 2);
  const MetricField g = MetricField::from_expressions(
      2, {parse_expression("1 + Q1^2", vars), parse_expression("Q1*Q2", vars),
          parse_expression("Q1*Q2", vars), parse_expression("2 + sin(Q2)", vars)});
  const std::vector<double> x{0.6, -0.9};
  const MatrixJet j = g.jet(x);
  for (int i = 0; i < 2; ++i)
    for (int jj = 0; jj < 2; ++jj) {
      oracle::FnN entry = [&](const std::vector<double>& p) { return g.value(p)(i, jj); };
      for (int k = 0; k < 2; ++k) {
        CHECK(j.d(k, i, jj) == doctest::Approx(oracle::partial(entry, x, k)).epsilon(1e-8));
        for (int l = 0; l < 2; ++l)
          CHECK(j.dd(l, k, i, jj) ==
                doctest::Approx(oracle::second_partial(entry, x, l, k)).epsilon(1e-6));
      }
    }
}

TEST_CASE("holonomic frames pass the Schwarz gate, ad-hoc frames fail it") {
  const auto vars = coordinate_names("Q", 2);
  const SmoothMap q = SmoothMap::from_expressions(
      {parse_expression("Q1 + 0.2*sin(Q2)", vars), parse_expression("Q2 + 0.1*Q1^2", vars)}, 2);
  CHECK(schwarz_residual(q, std::vector<double>{0.4, 1.3}) < 1e-12);

  // e^1_1 = Q2^2 cannot be a Jacobian row: d_2 e^1_1 - d_1 e^1_2 = 2 Q2.
  const MatrixField e = MatrixField::from_expressions(
      2, {parse_expression("Q2^2", vars), parse_expression("0", vars),
          parse_expression("0", vars), parse_expression("1", vars)});
  CHECK(schwarz_residual(e, std::vector<double>{1.0, 1.0}) == doctest::Approx(2.0));
}

TEST_CASE("Cartan connection of the square map") {
  // D = 1, q = Q^2 (so e = 2Q), f = 4 Q^2. At Q = 1:
  //   Gamma_{Q0}^0 = f'/f = 2, Gamma_{0Q}^0 = 0 (static frame),
  //   Gamma_{QQ}^Q = e'/e = 1, and S_Q = f'/(2f) = 1.
  const FrameField frame = FrameField::from_space_map(
      SmoothMap::from_expressions({parse1("Q1^2")}, 1),
      ScalarField::from_expression(parse1("4*Q1^2"), 1));
  const std::vector<double> Q{1.0};
  const Tensor3 gamma = cartan_connection(frame, Q);
  CHECK(gamma(1, 0, 0) == doctest::Approx(2.0));
  CHECK(gamma(0, 1, 0) == doctest::Approx(0.0));
  CHECK(gamma(1, 1, 1) == doctest::Approx(1.0));
  const Vec s = torsion_contracted(frame, Q);
  REQUIRE(s.size() == 1);
  CHECK(s[0] == doctest::Approx(1.0));
}

TEST_CASE("contracted torsion picks out the time-scale gradient") {
  // f = exp(Q1) in D = 2: S = (1/2, 0) at every point.
  const auto vars = coordinate_names("Q", 2);
  const FrameField frame = FrameField::from_space_map(
      SmoothMap::identity(2),
      ScalarField::from_expression(parse_expression("exp(Q1)", vars), 2));
  const Vec s = torsion_contracted(frame, std::vector<double>{0.3, -0.8});
  CHECK(s[0] == doctest::Approx(0.5));
  CHECK(s[1] == doctest::Approx(0.0));
}

TEST_CASE("degenerate frames are rejected") {
  const FrameField frame = FrameField::from_space_map(
      SmoothMap::from_expressions({parse1("Q1^2")}, 1),
      ScalarField::from_expression(parse1("4*Q1^2"), 1));
  // e = 2Q vanishes at the origin; f does too.
  CHECK_THROWS_AS((void)cartan_connection(frame, std::vector<double>{0.0}), DegenerateFrame);
}

TEST_CASE("smooth map jets and Hessians") {
  const auto vars = coordinate_names("Q", 2);
  const SmoothMap m = SmoothMap::from_expressions(
      {parse_expression("Q1*Q2^2", vars), parse_expression("exp(Q1) - Q2", vars)}, 2);
  const std::vector<double> x{0.5, 1.5};
  const Mat ja = m.jacobian(x);
  CHECK(ja(0, 0) == doctest::Approx(1.5 * 1.5));
  CHECK(ja(0, 1) == doctest::Approx(2 * 0.5 * 1.5));
  CHECK(ja(1, 0) == doctest::Approx(std::exp(0.5)));
  CHECK(ja(1, 1) == doctest::Approx(-1.0));
  const Tensor3 h = m.hessian(x);
  CHECK(h(0, 0, 1) == doctest::Approx(2 * 1.5));  // d^2 q1 / dQ1 dQ2
  CHECK(h(0, 0, 0) == doctest::Approx(0.0));
  CHECK(h(1, 0, 0) == doctest::Approx(std::exp(0.5)));
}
