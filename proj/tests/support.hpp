#pragma once

// Independent oracles and fixtures shared by the unit tests and the
// acceptance binary. Nothing here calls the library's dense kernels.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "lowsync/dense.hpp"
#include "lowsync/ortho.hpp"

namespace testsupport {

using lowsync::DenseMatrix;
using lowsync::Vector;

inline DenseMatrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed,
                                 double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(lo, hi);
  DenseMatrix m(r, c);
  for (std::size_t j = 0; j < c; ++j)
    for (std::size_t i = 0; i < r; ++i) m(i, j) = d(rng);
  return m;
}

inline Vector random_vector(std::size_t n, std::uint64_t seed, double lo = -1.0,
                            double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(lo, hi);
  Vector v(n);
  for (double& x : v) x = d(rng);
  return v;
}

/// Plain triple-loop product (kept separate from the library operator).
inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      long double s = 0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += (long double)a(i, k) * b(k, j);
      c(i, j) = static_cast<double>(s);
    }
  return c;
}

inline Vector matvec(const DenseMatrix& a, const Vector& x) {
  Vector y(a.rows(), 0.0);
  for (std::size_t j = 0; j < a.cols(); ++j)
    for (std::size_t i = 0; i < a.rows(); ++i) y[i] += a(i, j) * x[j];
  return y;
}

inline lowsync::LinearOperator dense_operator(const DenseMatrix& a) {
  return [a](std::span<const double> x, std::span<double> y) {
    std::fill(y.begin(), y.end(), 0.0);
    for (std::size_t j = 0; j < a.cols(); ++j)
      for (std::size_t i = 0; i < a.rows(); ++i) y[i] += a(i, j) * x[j];
  };
}

/// Q diag(s) Q^T-like well-conditioned operator: orthogonal-ish mix of a
/// diagonal with singular values in [1, cond].
inline DenseMatrix well_conditioned(std::size_t n, double cond, std::uint64_t seed) {
  DenseMatrix a = random_matrix(n, n, seed, -0.5, 0.5);
  for (std::size_t j = 0; j < n; ++j) {
    double colsum = 0.0;
    for (std::size_t i = 0; i < n; ++i) colsum += std::abs(a(i, j));
    a(j, j) = colsum + 1.0 + (cond - 1.0) * static_cast<double>(j) / static_cast<double>(n - 1);
  }
  return a;
}

inline double max_abs_diff(const Vector& a, const Vector& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs(const Vector& a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::abs(x));
  return m;
}

inline double rel_diff(const Vector& a, const Vector& ref) {
  const double d = max_abs(ref);
  return d == 0.0 ? max_abs_diff(a, ref) : max_abs_diff(a, ref) / d;
}

inline double rel_diff(const DenseMatrix& a, const DenseMatrix& ref) {
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < ref.cols(); ++j)
    for (std::size_t i = 0; i < ref.rows(); ++i) {
      num = std::max(num, std::abs(a(i, j) - ref(i, j)));
      den = std::max(den, std::abs(ref(i, j)));
    }
  return den == 0.0 ? num : num / den;
}

/// exp(A) by truncated Taylor series in quad precision with scaling and
/// squaring.
inline DenseMatrix taylor_expm(const DenseMatrix& a) {
  using Q = __float128;
  const std::size_t n = a.rows();
  double norm = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::abs(a(i, j));
    norm = std::max(norm, s);
  }
  int sq = 0;
  while (norm > 0.125) {
    norm /= 2.0;
    ++sq;
  }
  const Q scale = (Q)std::ldexp(1.0, -sq);
  std::vector<Q> A(n * n), term(n * n, 0), sum(n * n, 0), tmp(n * n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) A[i + n * j] = (Q)a(i, j) * scale;
  for (std::size_t i = 0; i < n; ++i) term[i + n * i] = sum[i + n * i] = 1;
  auto mul = [n](const std::vector<Q>& x, const std::vector<Q>& y, std::vector<Q>& z) {
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < n; ++i) {
        Q s = 0;
        for (std::size_t k = 0; k < n; ++k) s += x[i + n * k] * y[k + n * j];
        z[i + n * j] = s;
      }
  };
  for (int k = 1; k <= 40; ++k) {
    mul(term, A, tmp);
    for (std::size_t t = 0; t < n * n; ++t) {
      term[t] = tmp[t] / (Q)k;
      sum[t] += term[t];
    }
  }
  for (int s = 0; s < sq; ++s) {
    mul(sum, sum, tmp);
    sum.swap(tmp);
  }
  DenseMatrix out(n, n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) out(i, j) = (double)sum[i + n * j];
  return out;
}

/// Adaptive Simpson quadrature of a matrix-valued integrand on [a, b],
/// refined until the max-entry Richardson error is below tol.
inline DenseMatrix adaptive_simpson(const std::function<DenseMatrix(double)>& f, double a,
                                    double b, double tol) {
  auto combine = [](const DenseMatrix& x, double sx, const DenseMatrix& y, double sy) {
    DenseMatrix r(x.rows(), x.cols());
    for (std::size_t j = 0; j < x.cols(); ++j)
      for (std::size_t i = 0; i < x.rows(); ++i) r(i, j) = sx * x(i, j) + sy * y(i, j);
    return r;
  };
  auto simpson = [&](const DenseMatrix& fa, const DenseMatrix& fm, const DenseMatrix& fb,
                     double w) {
    DenseMatrix r(fa.rows(), fa.cols());
    for (std::size_t j = 0; j < fa.cols(); ++j)
      for (std::size_t i = 0; i < fa.rows(); ++i)
        r(i, j) = w / 6.0 * (fa(i, j) + 4.0 * fm(i, j) + fb(i, j));
    return r;
  };
  std::function<DenseMatrix(double, double, const DenseMatrix&, const DenseMatrix&,
                            const DenseMatrix&, const DenseMatrix&, double, int)>
      rec = [&](double lo, double hi, const DenseMatrix& flo, const DenseMatrix& fmid,
                const DenseMatrix& fhi, const DenseMatrix& whole, double eps,
                int depth) -> DenseMatrix {
    const double mid = 0.5 * (lo + hi);
    const DenseMatrix fl = f(0.5 * (lo + mid));
    const DenseMatrix fr = f(0.5 * (mid + hi));
    const DenseMatrix left = simpson(flo, fl, fmid, mid - lo);
    const DenseMatrix right = simpson(fmid, fr, fhi, hi - mid);
    const DenseMatrix both = combine(left, 1.0, right, 1.0);
    double err = 0.0;
    for (std::size_t j = 0; j < both.cols(); ++j)
      for (std::size_t i = 0; i < both.rows(); ++i)
        err = std::max(err, std::abs(both(i, j) - whole(i, j)));
    if (depth <= 0 || err <= 15.0 * eps)
      return combine(both, 1.0, combine(both, 1.0, whole, -1.0), 1.0 / 15.0);
    return combine(rec(lo, mid, flo, fl, fmid, left, eps / 2.0, depth - 1), 1.0,
                   rec(mid, hi, fmid, fr, fhi, right, eps / 2.0, depth - 1), 1.0);
  };
  const DenseMatrix fa = f(a), fm = f(0.5 * (a + b)), fb = f(b);
  return rec(a, b, fa, fm, fb, simpson(fa, fm, fb, b - a), tol, 40);
}

/// phi_k(A) = int_0^1 exp((1 - t) A) t^(k-1) / (k-1)! dt by quadrature.
inline DenseMatrix phi_quadrature(const DenseMatrix& a, std::size_t k, double tol) {
  if (k == 0) return taylor_expm(a);
  double fact = 1.0;
  for (std::size_t i = 2; i < k; ++i) fact *= static_cast<double>(i);
  return adaptive_simpson(
      [&](double t) {
        DenseMatrix s(a.rows(), a.cols());
        for (std::size_t j = 0; j < a.cols(); ++j)
          for (std::size_t i = 0; i < a.rows(); ++i) s(i, j) = (1.0 - t) * a(i, j);
        DenseMatrix e = taylor_expm(s);
        const double w = std::pow(t, static_cast<double>(k - 1)) / fact;
        for (std::size_t j = 0; j < a.cols(); ++j)
          for (std::size_t i = 0; i < a.rows(); ++i) e(i, j) *= w;
        return e;
      },
      0.0, 1.0, tol);
}

/// sum_k tau^k phi_k(tau J) v_k through the quadrature oracle (small n).
inline Vector phi_combination_quadrature(const DenseMatrix& j, const std::vector<Vector>& v,
                                         double tau = 1.0) {
  DenseMatrix tj(j.rows(), j.cols());
  for (std::size_t c = 0; c < j.cols(); ++c)
    for (std::size_t r = 0; r < j.rows(); ++r) tj(r, c) = tau * j(r, c);
  Vector out(j.rows(), 0.0);
  for (std::size_t k = 0; k < v.size(); ++k) {
    const DenseMatrix p = phi_quadrature(tj, k, 1e-14);
    const Vector pv = matvec(p, v[k]);
    const double w = std::pow(tau, static_cast<double>(k));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += w * pv[i];
  }
  return out;
}

/// Same combination from the quad-precision exponential of the explicitly
/// assembled block matrix tau [[J, W], [0, K]], W = [v_p .. v_1].
inline Vector phi_combination_oracle(const DenseMatrix& j, const std::vector<Vector>& v,
                                     double tau = 1.0) {
  const std::size_t n = j.rows();
  const std::size_t p = v.size() - 1;
  DenseMatrix a(n + p, n + p);
  for (std::size_t c = 0; c < n; ++c)
    for (std::size_t r = 0; r < n; ++r) a(r, c) = tau * j(r, c);
  for (std::size_t c = 0; c < p; ++c)
    for (std::size_t r = 0; r < n; ++r) a(r, n + c) = tau * v[p - c][r];
  for (std::size_t c = 0; c + 1 < p; ++c) a(n + c, n + c + 1) = tau;
  Vector start(n + p, 0.0);
  for (std::size_t r = 0; r < n; ++r) start[r] = v[0][r];
  if (p > 0) start[n + p - 1] = 1.0;
  const Vector full = matvec(taylor_expm(a), start);
  return Vector(full.begin(), full.begin() + static_cast<std::ptrdiff_t>(n));
}

/// 5-point Laplacian on an n x n interior grid with zero Dirichlet data,
/// spacing 1 / (n + 1), scaled by `scale`.
inline DenseMatrix dirichlet_laplacian(std::size_t n, double scale) {
  const std::size_t N = n * n;
  const double h = 1.0 / static_cast<double>(n + 1);
  const double c = scale / (h * h);
  DenseMatrix a(N, N);
  for (std::size_t jy = 0; jy < n; ++jy)
    for (std::size_t ix = 0; ix < n; ++ix) {
      const std::size_t k = ix + n * jy;
      a(k, k) = -4.0 * c;
      if (ix > 0) a(k, k - 1) = c;
      if (ix + 1 < n) a(k, k + 1) = c;
      if (jy > 0) a(k, k - n) = c;
      if (jy + 1 < n) a(k, k + n) = c;
    }
  return a;
}

/// Matrix-free version of dirichlet_laplacian.
inline lowsync::LinearOperator dirichlet_laplacian_op(std::size_t n, double scale) {
  const double h = 1.0 / static_cast<double>(n + 1);
  const double c = scale / (h * h);
  return [n, c](std::span<const double> x, std::span<double> y) {
    for (std::size_t jy = 0; jy < n; ++jy)
      for (std::size_t ix = 0; ix < n; ++ix) {
        const std::size_t k = ix + n * jy;
        double s = -4.0 * x[k];
        if (ix > 0) s += x[k - 1];
        if (ix + 1 < n) s += x[k + 1];
        if (jy > 0) s += x[k - n];
        if (jy + 1 < n) s += x[k + n];
        y[k] = c * s;
      }
  };
}

/// Scalar phi_k(z): long double Taylor series near 0, recurrence otherwise.
inline double scalar_phi(std::size_t k, double z) {
  using L = long double;
  if (std::abs(z) < 1.0) {
    L term = 1, sum = 0;
    for (std::size_t i = 1; i <= k; ++i) term /= (L)i;
    for (std::size_t m = 0; m < 40; ++m) {
      sum += term;
      term *= (L)z / (L)(m + k + 1);
    }
    return (double)sum;
  }
  L phi = std::exp((L)z);
  L fact = 1;
  for (std::size_t i = 0; i < k; ++i) {
    phi = (phi - 1 / fact) / (L)z;
    fact *= (L)(i + 1);
  }
  return (double)phi;
}

/// sum_k phi_k(scale * Laplacian) v_k for the Dirichlet Laplacian on an
/// n x n interior grid, evaluated in its sine eigenbasis.
inline Vector laplacian_phi_oracle(std::size_t n, double scale, const std::vector<Vector>& v) {
  const double h = 1.0 / static_cast<double>(n + 1);
  const double pi = 3.14159265358979323846;
  DenseMatrix Q(n, n);
  Vector lam(n);
  for (std::size_t a = 0; a < n; ++a) {
    lam[a] = scale * (2.0 * std::cos(static_cast<double>(a + 1) * pi * h) - 2.0) / (h * h);
    for (std::size_t i = 0; i < n; ++i)
      Q(i, a) = std::sqrt(2.0 * h) *
                std::sin(static_cast<double>((a + 1) * (i + 1)) * pi * h);
  }
  // Separable transform: coefficients c(a, b) = sum_{i,j} Q(i,a) Q(j,b) x(i + n j).
  auto forward = [&](const Vector& x) {
    Vector t(n * n, 0.0), c(n * n, 0.0);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t a = 0; a < n; ++a) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += Q(i, a) * x[i + n * j];
        t[a + n * j] = s;
      }
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t a = 0; a < n; ++a) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += Q(j, b) * t[a + n * j];
        c[a + n * b] = s;
      }
    return c;
  };
  Vector coef(n * n, 0.0);
  for (std::size_t k = 0; k < v.size(); ++k) {
    const Vector c = forward(v[k]);
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t a = 0; a < n; ++a)
        coef[a + n * b] += scalar_phi(k, lam[a] + lam[b]) * c[a + n * b];
  }
  // Inverse transform (Q is orthogonal and symmetric).
  return forward(coef);
}

/// Logistic ODE u' = -u + u^2 closed form.
inline double logistic_exact(double u0, double t) {
  return 1.0 / (1.0 + (1.0 / u0 - 1.0) * std::exp(t));
}

}  // namespace testsupport
