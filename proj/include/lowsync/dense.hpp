#pragma once

// Small dense linear algebra on the Krylov scale (m <= 256): the matrix
// exponential, phi-functions of a matrix, and triangular solves.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace lowsync {

using Vector = std::vector<double>;

/// Column-major dense matrix of doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  /// Row-wise initializer, e.g. `DenseMatrix{{1, 2}, {3, 4}}`.
  DenseMatrix(std::initializer_list<std::initializer_list<double>> rows);

  static DenseMatrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i + j * rows_]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i + j * rows_]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<double> column(std::size_t j) { return {data_.data() + j * rows_, rows_}; }
  std::span<const double> column(std::size_t j) const {
    return {data_.data() + j * rows_, rows_};
  }

  /// Leading `r` x `c` block as a new matrix.
  DenseMatrix block(std::size_t r0, std::size_t c0, std::size_t r, std::size_t c) const;

  bool all_finite() const noexcept;

  DenseMatrix& operator*=(double s);
  DenseMatrix& operator+=(const DenseMatrix& other);
  DenseMatrix& operator-=(const DenseMatrix& other);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator*(double s, DenseMatrix a);
DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b);
DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b);
Vector operator*(const DenseMatrix& a, std::span<const double> x);

DenseMatrix transpose(const DenseMatrix& a);
double norm_frobenius(const DenseMatrix& a);
double norm_one(const DenseMatrix& a);
double max_abs(const DenseMatrix& a);

/// Solves A X = B by LU with partial pivoting. Throws SingularMatrix.
DenseMatrix lu_solve(DenseMatrix a, DenseMatrix b);

/// e^M by scaling and squaring with the degree-13 Pade approximant.
DenseMatrix expm_dense(const DenseMatrix& m);

/// phi_k(M); phi_0 = e^M. For k >= 1 the block matrix
/// [[M, I, 0..], [0, 0, I, ..], .., [0 .. 0]] with k+1 block rows is
/// exponentiated and its top-right block returned.
DenseMatrix phi_dense(const DenseMatrix& m, std::size_t k);

/// Forward substitution for lower-triangular M. Throws SingularMatrix on a
/// zero diagonal entry.
Vector lower_triangular_solve(const DenseMatrix& m, std::span<const double> b);

}  // namespace lowsync
