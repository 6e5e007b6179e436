#pragma once

#include <cstddef>
#include <span>

#include "lowsync/dense.hpp"

namespace lowsync {

/// Autonomous system u' = F(u) with a Jacobian-vector product.
class OdeProblem {
 public:
  virtual ~OdeProblem() = default;
  virtual std::size_t size() const = 0;
  virtual void rhs(std::span<const double> u, std::span<double> out) const = 0;
  /// out = J(u) v with J = dF/du.
  virtual void jacobian_action(std::span<const double> u, std::span<const double> v,
                               std::span<double> out) const = 0;

  Vector rhs(std::span<const double> u) const;
  Vector jacobian_action(std::span<const double> u, std::span<const double> v) const;
};

/// One-sided directional difference (F(u + e v) - F(u)) / e with
/// e = sqrt(eps_mach) (1 + ||u||_inf) / ||v||_inf.
Vector fd_jacobian_action(const OdeProblem& problem, std::span<const double> u,
                          std::span<const double> v);

/// u' = -u + u^2 componentwise; exact solution 1 / (1 + (1/u_0 - 1) e^t).
class LogisticOde final : public OdeProblem {
 public:
  explicit LogisticOde(std::size_t n = 1) : n_(n) {}
  std::size_t size() const override { return n_; }
  void rhs(std::span<const double> u, std::span<double> out) const override;
  void jacobian_action(std::span<const double> u, std::span<const double> v,
                       std::span<double> out) const override;
  using OdeProblem::jacobian_action;
  using OdeProblem::rhs;

  static double exact(double u0, double t);

 private:
  std::size_t n_;
};

}  // namespace lowsync
