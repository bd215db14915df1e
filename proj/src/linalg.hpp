#pragma once
// Small dense linear algebra for low-dimensional geometry work (D <= 5).
// Row-major Mat, flat rank-3/4 tensors, LU with partial pivoting, Cholesky.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <utility>
#include <span>
#include <stdexcept>
#include <vector>

namespace nst {

using Vec = std::vector<double>;

class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), a_(rows * cols, fill) {}
  static Mat identity(std::size_t n) {
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t i, std::size_t j) {
    assert(i < rows_ && j < cols_);
    return a_[i * cols_ + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    assert(i < rows_ && j < cols_);
    return a_[i * cols_ + j];
  }
  double* data() { return a_.data(); }
  const double* data() const { return a_.data(); }

  Mat& operator+=(const Mat& o) {
    assert(rows_ == o.rows_ && cols_ == o.cols_);
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] += o.a_[k];
    return *this;
  }
  Mat& operator-=(const Mat& o) {
    assert(rows_ == o.rows_ && cols_ == o.cols_);
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] -= o.a_[k];
    return *this;
  }
  Mat& operator*=(double s) {
    for (double& x : a_) x *= s;
    return *this;
  }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  Vec a_;
};

inline Mat operator+(Mat a, const Mat& b) { return a += b; }
inline Mat operator-(Mat a, const Mat& b) { return a -= b; }
inline Mat operator*(Mat a, double s) { return a *= s; }
inline Mat operator*(double s, Mat a) { return a *= s; }

inline Mat operator*(const Mat& a, const Mat& b) {
  assert(a.cols() == b.rows());
  Mat c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

inline Vec operator*(const Mat& a, std::span<const double> x) {
  assert(a.cols() == x.size());
  Vec y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) y[i] += a(i, j) * x[j];
  return y;
}

inline Mat transpose(const Mat& a) {
  Mat t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

inline double max_abs(const Mat& a) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) m = std::max(m, std::abs(a(i, j)));
  return m;
}

// LU with partial pivoting; throws std::runtime_error on exact singularity.
struct LuFactor {
  Mat lu;
  std::vector<int> piv;
  int sign = 1;
};

inline LuFactor lu_factor(Mat a) {
  const std::size_t n = a.rows();
  assert(a.cols() == n);
  LuFactor f{std::move(a), std::vector<int>(n), 1};
  for (std::size_t i = 0; i < n; ++i) f.piv[i] = static_cast<int>(i);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(f.lu(i, k)) > std::abs(f.lu(p, k))) p = i;
    if (f.lu(p, k) == 0.0) throw std::runtime_error("lu_factor: singular matrix");
    if (p != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(f.lu(p, j), f.lu(k, j));
      std::swap(f.piv[p], f.piv[k]);
      f.sign = -f.sign;
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      f.lu(i, k) /= f.lu(k, k);
      const double lik = f.lu(i, k);
      for (std::size_t j = k + 1; j < n; ++j) f.lu(i, j) -= lik * f.lu(k, j);
    }
  }
  return f;
}

inline Vec lu_solve(const LuFactor& f, std::span<const double> b) {
  const std::size_t n = f.lu.rows();
  assert(b.size() == n);
  Vec x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = b[static_cast<std::size_t>(f.piv[i])];
  for (std::size_t i = 1; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) x[i] -= f.lu(i, j) * x[j];
  for (std::size_t ii = n; ii-- > 0;) {
    for (std::size_t j = ii + 1; j < n; ++j) x[ii] -= f.lu(ii, j) * x[j];
    x[ii] /= f.lu(ii, ii);
  }
  return x;
}

inline double lu_det(const LuFactor& f) {
  double d = f.sign;
  for (std::size_t i = 0; i < f.lu.rows(); ++i) d *= f.lu(i, i);
  return d;
}

inline Mat lu_inverse(const LuFactor& f) {
  const std::size_t n = f.lu.rows();
  Mat inv(n, n);
  Vec e(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = 1.0;
    Vec col = lu_solve(f, e);
    e[j] = 0.0;
    for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
  }
  return inv;
}

inline Mat inverse(const Mat& a) { return lu_inverse(lu_factor(a)); }
inline double determinant(const Mat& a) {
  try {
    return lu_det(lu_factor(a));
  } catch (const std::runtime_error&) {
    return 0.0;
  }
}

// Cholesky a = L L^T; returns false if a is not (numerically) SPD.
inline bool cholesky(const Mat& a, Mat* lower = nullptr) {
  const std::size_t n = a.rows();
  assert(a.cols() == n);
  Mat l(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      if (i == j) {
        if (s <= 0.0 || !std::isfinite(s)) return false;
        l(i, i) = std::sqrt(s);
      } else {
        l(i, j) = s / l(j, j);
      }
    }
  }
  if (lower) *lower = std::move(l);
  return true;
}

class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(std::size_t n0, std::size_t n1, std::size_t n2)
      : n0_(n0), n1_(n1), n2_(n2), a_(n0 * n1 * n2, 0.0) {}
  double& operator()(std::size_t i, std::size_t j, std::size_t k) {
    assert(i < n0_ && j < n1_ && k < n2_);
    return a_[(i * n1_ + j) * n2_ + k];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const {
    assert(i < n0_ && j < n1_ && k < n2_);
    return a_[(i * n1_ + j) * n2_ + k];
  }
  std::size_t dim0() const { return n0_; }
  std::size_t dim1() const { return n1_; }
  std::size_t dim2() const { return n2_; }
  double max_abs() const {
    double m = 0.0;
    for (double x : a_) m = std::max(m, std::abs(x));
    return m;
  }

 private:
  std::size_t n0_ = 0, n1_ = 0, n2_ = 0;
  Vec a_;
};

class Tensor4 {
 public:
  Tensor4() = default;
  Tensor4(std::size_t n0, std::size_t n1, std::size_t n2, std::size_t n3)
      : n0_(n0), n1_(n1), n2_(n2), n3_(n3), a_(n0 * n1 * n2 * n3, 0.0) {}
  double& operator()(std::size_t i, std::size_t j, std::size_t k, std::size_t l) {
    assert(i < n0_ && j < n1_ && k < n2_ && l < n3_);
    return a_[((i * n1_ + j) * n2_ + k) * n3_ + l];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
    assert(i < n0_ && j < n1_ && k < n2_ && l < n3_);
    return a_[((i * n1_ + j) * n2_ + k) * n3_ + l];
  }
  std::size_t dim0() const { return n0_; }
  std::size_t dim1() const { return n1_; }
  std::size_t dim2() const { return n2_; }
  std::size_t dim3() const { return n3_; }

 private:
  std::size_t n0_ = 0, n1_ = 0, n2_ = 0, n3_ = 0;
  Vec a_;
};

}  // namespace nst
