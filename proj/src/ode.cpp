#include "lowsync/ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lowsync {

Vector OdeProblem::rhs(std::span<const double> u) const {
  Vector out(size(), 0.0);
  rhs(u, out);
  return out;
}

Vector OdeProblem::jacobian_action(std::span<const double> u, std::span<const double> v) const {
  Vector out(size(), 0.0);
  jacobian_action(u, v, out);
  return out;
}

Vector fd_jacobian_action(const OdeProblem& problem, std::span<const double> u,
                          std::span<const double> v) {
  double unorm = 0.0;
  double vnorm = 0.0;
  for (double x : u) unorm = std::max(unorm, std::abs(x));
  for (double x : v) vnorm = std::max(vnorm, std::abs(x));
  Vector out(problem.size(), 0.0);
  if (vnorm == 0.0) return out;
  const double e =
      std::sqrt(std::numeric_limits<double>::epsilon()) * (1.0 + unorm) / vnorm;
  Vector shifted(u.begin(), u.end());
  for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] += e * v[i];
  const Vector f1 = problem.rhs(shifted);
  const Vector f0 = problem.rhs(u);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (f1[i] - f0[i]) / e;
  return out;
}

void LogisticOde::rhs(std::span<const double> u, std::span<double> out) const {
  for (std::size_t i = 0; i < n_; ++i) out[i] = -u[i] + u[i] * u[i];
}

void LogisticOde::jacobian_action(std::span<const double> u, std::span<const double> v,
                                  std::span<double> out) const {
  for (std::size_t i = 0; i < n_; ++i) out[i] = (-1.0 + 2.0 * u[i]) * v[i];
}

double LogisticOde::exact(double u0, double t) {
  return 1.0 / (1.0 + (1.0 / u0 - 1.0) * std::exp(t));
}

}  // namespace lowsync
