#include "lowsync/dense.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lowsync/errors.hpp"

namespace lowsync {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.assign(rows_ * cols_, 0.0);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != cols_) throw DimensionError("DenseMatrix: ragged initializer");
    std::size_t j = 0;
    for (double v : row) (*this)(i, j++) = v;
    ++i;
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix id(n, n);
  for (std::size_t i = 0; i < n; ++i) id(i, i) = 1.0;
  return id;
}

DenseMatrix DenseMatrix::block(std::size_t r0, std::size_t c0, std::size_t r,
                               std::size_t c) const {
  if (r0 + r > rows_ || c0 + c > cols_) throw DimensionError("DenseMatrix::block out of range");
  DenseMatrix out(r, c);
  for (std::size_t j = 0; j < c; ++j)
    for (std::size_t i = 0; i < r; ++i) out(i, j) = (*this)(r0 + i, c0 + j);
  return out;
}

bool DenseMatrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

DenseMatrix& DenseMatrix::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

DenseMatrix& DenseMatrix::operator+=(const DenseMatrix& other) {
  if (rows_ != other.rows_ || cols_ != other.cols_)
    throw DimensionError("DenseMatrix: shape mismatch in +=");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += other.data_[k];
  return *this;
}

DenseMatrix& DenseMatrix::operator-=(const DenseMatrix& other) {
  if (rows_ != other.rows_ || cols_ != other.cols_)
    throw DimensionError("DenseMatrix: shape mismatch in -=");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= other.data_[k];
  return *this;
}

DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw DimensionError("DenseMatrix: shape mismatch in product");
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double bkj = b(k, j);
      if (bkj == 0.0) continue;
      for (std::size_t i = 0; i < a.rows(); ++i) c(i, j) += a(i, k) * bkj;
    }
  return c;
}

DenseMatrix operator*(double s, DenseMatrix a) { return a *= s; }
DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b) { return a += b; }
DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b) { return a -= b; }

Vector operator*(const DenseMatrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) throw DimensionError("DenseMatrix: shape mismatch in mat-vec");
  Vector y(a.rows(), 0.0);
  for (std::size_t j = 0; j < a.cols(); ++j)
    for (std::size_t i = 0; i < a.rows(); ++i) y[i] += a(i, j) * x[j];
  return y;
}

DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix t(a.cols(), a.rows());
  for (std::size_t j = 0; j < a.cols(); ++j)
    for (std::size_t i = 0; i < a.rows(); ++i) t(j, i) = a(i, j);
  return t;
}

double norm_frobenius(const DenseMatrix& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return std::sqrt(s);
}

double norm_one(const DenseMatrix& a) {
  double best = 0.0;
  for (std::size_t j = 0; j < a.cols(); ++j) {
    double s = 0.0;
    for (double v : a.column(j)) s += std::abs(v);
    best = std::max(best, s);
  }
  return best;
}

double max_abs(const DenseMatrix& a) {
  double best = 0.0;
  for (double v : a.data()) best = std::max(best, std::abs(v));
  return best;
}

DenseMatrix lu_solve(DenseMatrix a, DenseMatrix b) {
  const std::size_t n = a.rows();
  if (!a.square() || b.rows() != n) throw DimensionError("lu_solve: shape mismatch");
  std::vector<std::size_t> piv(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(p, k))) p = i;
    if (a(p, k) == 0.0) throw SingularMatrix("lu_solve: singular matrix");
    piv[k] = p;
    if (p != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(p, j));
      for (std::size_t j = 0; j < b.cols(); ++j) std::swap(b(k, j), b(p, j));
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      a(i, k) /= a(k, k);
      const double l = a(i, k);
      for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= l * a(k, j);
      for (std::size_t j = 0; j < b.cols(); ++j) b(i, j) -= l * b(k, j);
    }
  }
  for (std::size_t c = 0; c < b.cols(); ++c)
    for (std::size_t ii = n; ii-- > 0;) {
      double s = b(ii, c);
      for (std::size_t j = ii + 1; j < n; ++j) s -= a(ii, j) * b(j, c);
      b(ii, c) = s / a(ii, ii);
    }
  return b;
}

namespace {

void require_square_finite(const DenseMatrix& m, const char* who) {
  if (!m.square()) throw DimensionError(std::string(who) + ": matrix must be square");
  if (!m.all_finite()) throw InvalidInput(std::string(who) + ": non-finite entry");
}

}  // namespace

DenseMatrix expm_dense(const DenseMatrix& m) {
  require_square_finite(m, "expm_dense");
  const std::size_t n = m.rows();
  if (n == 0) return {};

  // Higham (2005), degree 13.
  static constexpr double b[] = {64764752532480000.0,
                                 32382376266240000.0,
                                 7771770303897600.0,
                                 1187353796428800.0,
                                 129060195264000.0,
                                 10559470521600.0,
                                 670442572800.0,
                                 33522128640.0,
                                 1323241920.0,
                                 40840800.0,
                                 960960.0,
                                 16380.0,
                                 182.0,
                                 1.0};
  constexpr double theta13 = 5.371920351148152;

  const double nrm = norm_one(m);
  int s = 0;
  if (nrm > theta13) s = static_cast<int>(std::ceil(std::log2(nrm / theta13)));
  const DenseMatrix a = std::ldexp(1.0, -s) * m;

  const DenseMatrix id = DenseMatrix::identity(n);
  const DenseMatrix a2 = a * a;
  const DenseMatrix a4 = a2 * a2;
  const DenseMatrix a6 = a4 * a2;

  DenseMatrix inner_u = b[13] * a6 + b[11] * a4 + b[9] * a2;
  inner_u = a6 * inner_u;
  inner_u += b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id;
  const DenseMatrix u = a * inner_u;

  DenseMatrix v = b[12] * a6 + b[10] * a4 + b[8] * a2;
  v = a6 * v;
  v += b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;

  DenseMatrix r = lu_solve(v - u, v + u);
  for (int k = 0; k < s; ++k) r = r * r;
  return r;
}

DenseMatrix phi_dense(const DenseMatrix& m, std::size_t k) {
  require_square_finite(m, "phi_dense");
  if (k == 0) return expm_dense(m);
  const std::size_t n = m.rows();
  const std::size_t big = n * (k + 1);
  DenseMatrix aug(big, big);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) aug(i, j) = m(i, j);
  for (std::size_t blk = 0; blk < k; ++blk)
    for (std::size_t i = 0; i < n; ++i) aug(blk * n + i, (blk + 1) * n + i) = 1.0;
  return expm_dense(aug).block(0, k * n, n, n);
}

Vector lower_triangular_solve(const DenseMatrix& m, std::span<const double> b) {
  if (!m.square() || m.rows() != b.size())
    throw DimensionError("lower_triangular_solve: shape mismatch");
  const std::size_t n = b.size();
  Vector x(b.begin(), b.end());
  for (std::size_t i = 0; i < n; ++i) {
    if (m(i, i) == 0.0) throw SingularMatrix("lower_triangular_solve: zero diagonal entry");
    double s = x[i];
    for (std::size_t j = 0; j < i; ++j) s -= m(i, j) * x[j];
    x[i] = s / m(i, i);
  }
  return x;
}

}  // namespace lowsync
