#ifndef QSD_LINALG_HPP
#define QSD_LINALG_HPP

#include <vector>

#include "qsd/errors.hpp"
#include "qsd/scalar.hpp"

namespace qsd {

// Dense row-major matrix over a Scalar.  Sized for the desk-scale systems
// in this library (N is the number of non-absorbing states).
template <class S>
class Matrix {
 public:
  Matrix(int rows, int cols)
      : rows_(rows), cols_(cols),
        data_(static_cast<size_t>(rows) * static_cast<size_t>(cols), scalar_traits<S>::zero()) {
    if (rows < 0 || cols < 0) throw UsageError("negative matrix dimension");
  }
  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = scalar_traits<S>::one();
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  S& operator()(int i, int j) { return data_[static_cast<size_t>(i) * cols_ + j]; }
  const S& operator()(int i, int j) const { return data_[static_cast<size_t>(i) * cols_ + j]; }

 private:
  int rows_, cols_;
  std::vector<S> data_;
};

// LU factorization with row pivoting, reusable across many right-hand
// sides.  Rational backend picks any nonzero pivot (exact); float backend
// picks the largest magnitude (partial pivoting).
template <class S>
class LuFactorization {
 public:
  explicit LuFactorization(Matrix<S> a) : lu_(std::move(a)), perm_(lu_.rows()) {
    if (lu_.rows() != lu_.cols()) throw UsageError("LU of a non-square matrix");
    const int n = lu_.rows();
    for (int i = 0; i < n; ++i) perm_[static_cast<size_t>(i)] = i;
    for (int k = 0; k < n; ++k) {
      int pivot_row = -1;
      if constexpr (scalar_traits<S>::exact) {
        for (int i = k; i < n; ++i)
          if (!scalar_traits<S>::is_zero(lu_(i, k))) {
            pivot_row = i;
            break;
          }
      } else {
        S best = scalar_traits<S>::zero();
        for (int i = k; i < n; ++i) {
          const S mag = abs_value(lu_(i, k));
          if (pivot_row < 0 || best < mag) {
            best = mag;
            pivot_row = i;
          }
        }
        if (pivot_row >= 0 && scalar_traits<S>::is_zero(lu_(pivot_row, k))) pivot_row = -1;
      }
      if (pivot_row < 0) throw NumericError("singular matrix in LU factorization");
      if (pivot_row != k) {
        std::swap(perm_[static_cast<size_t>(k)], perm_[static_cast<size_t>(pivot_row)]);
        for (int j = 0; j < n; ++j) std::swap(lu_(k, j), lu_(pivot_row, j));
      }
      for (int i = k + 1; i < n; ++i) {
        const S f = lu_(i, k) / lu_(k, k);
        lu_(i, k) = f;
        for (int j = k + 1; j < n; ++j) {
          lu_(i, j) -= f * lu_(k, j);
          scalar_traits<S>::check(lu_(i, j));
        }
      }
    }
  }

  std::vector<S> solve(const std::vector<S>& rhs) const {
    const int n = lu_.rows();
    if (static_cast<int>(rhs.size()) != n) throw UsageError("rhs size mismatch in LU solve");
    std::vector<S> x(static_cast<size_t>(n), scalar_traits<S>::zero());
    for (int i = 0; i < n; ++i) {
      S acc = rhs[static_cast<size_t>(perm_[static_cast<size_t>(i)])];
      for (int j = 0; j < i; ++j) acc -= lu_(i, j) * x[static_cast<size_t>(j)];
      x[static_cast<size_t>(i)] = acc;
    }
    for (int i = n - 1; i >= 0; --i) {
      S acc = x[static_cast<size_t>(i)];
      for (int j = i + 1; j < n; ++j) acc -= lu_(i, j) * x[static_cast<size_t>(j)];
      x[static_cast<size_t>(i)] = acc / lu_(i, i);
      scalar_traits<S>::check(x[static_cast<size_t>(i)]);
    }
    return x;
  }

 private:
  Matrix<S> lu_;
  std::vector<int> perm_;
};

// Spectral-radius test for a non-negative matrix A: spr(A) < 1 iff I - A is
// a nonsingular M-matrix iff Gaussian elimination without row exchanges on
// I - A keeps every pivot strictly positive (the pivots are ratios of the
// leading principal minors).
template <class S>
bool spectral_radius_below_one(const Matrix<S>& a) {
  if (a.rows() != a.cols()) throw UsageError("spectral radius test needs a square matrix");
  const int n = a.rows();
  Matrix<S> m = Matrix<S>::identity(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) -= a(i, j);
  for (int k = 0; k < n; ++k) {
    if (!(scalar_traits<S>::zero() < m(k, k))) return false;
    for (int i = k + 1; i < n; ++i) {
      const S f = m(i, k) / m(k, k);
      for (int j = k; j < n; ++j) m(i, j) -= f * m(k, j);
    }
  }
  return true;
}

}  // namespace qsd

#endif  // QSD_LINALG_HPP
