#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "linalg.hpp"

using namespace nst;

TEST_CASE("LU solves a 3x3 system with pivoting") {
  Mat a(3, 3);
  // Leading zero forces a row swap.
  const double rows[3][3] = {{0, 2, 1}, {1, 1, 1}, {2, -1, 3}};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a(i, j) = rows[i][j];
  const Vec b{5.0, 6.0, 4.0};
  const Vec x = lu_solve(lu_factor(a), b);
  // Residual check instead of hard-coding the solution.
  for (int i = 0; i < 3; ++i) {
    double r = -b[i];
    for (int j = 0; j < 3; ++j) r += a(i, j) * x[j];
    CHECK(std::abs(r) < 1e-13);
  }
}

TEST_CASE("determinant and inverse") {
  Mat a(2, 2);
  a(0, 0) = 4;
  a(0, 1) = 7;
  a(1, 0) = 2;
  a(1, 1) = 6;
  CHECK(determinant(a) == doctest::Approx(10.0));
  const Mat inv = inverse(a);
  const Mat id = a * inv;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) CHECK(id(i, j) == doctest::Approx(i == j ? 1.0 : 0.0));
}

TEST_CASE("singular matrix is rejected") {
  Mat a(2, 2);
  a(0, 0) = 1;
  a(0, 1) = 2;
  a(1, 0) = 2;
  a(1, 1) = 4;
  CHECK(determinant(a) == 0.0);
  CHECK_THROWS_AS((void)lu_factor(a), std::runtime_error);
}

TEST_CASE("cholesky classifies definiteness") {
  Mat spd(2, 2);
  spd(0, 0) = 2;
  spd(0, 1) = spd(1, 0) = 1;
  spd(1, 1) = 2;
  Mat lower;
  CHECK(cholesky(spd, &lower));
  // L L^T reproduces the input.
  const Mat l = lower;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      double s = 0.0;
      for (int k = 0; k < 2; ++k) s += l(i, k) * l(j, k);
      CHECK(s == doctest::Approx(spd(i, j)));
    }

  Mat indef = spd;
  indef(1, 1) = -2;
  CHECK_FALSE(cholesky(indef));
}

TEST_CASE("tensor storage round-trips indices") {
  Tensor3 t3(2, 3, 4);
  t3(1, 2, 3) = 7.5;
  CHECK(t3(1, 2, 3) == 7.5);
  CHECK(t3(0, 0, 0) == 0.0);

  Tensor4 t4(2, 2, 3, 3);
  t4(1, 0, 2, 1) = -2.25;
  CHECK(t4(1, 0, 2, 1) == -2.25);
  CHECK(t4.dim0() == 2);
  CHECK(t4.dim3() == 3);
}
