#include <doctest.h>

#include <cmath>

#include "lowsync/errors.hpp"
#include "lowsync/phikry.hpp"
#include "support.hpp"

using namespace lowsync;
using namespace testsupport;

namespace {

LinearOperator zero_operator() {
  return [](std::span<const double>, std::span<double> y) { std::fill(y.begin(), y.end(), 0.0); };
}

PhiResult evaluate(OrthoBackend b, const LinearOperator& op, const std::vector<Vector>& list,
                   double tol = 1e-12) {
  ReductionContext ctx;
  return phi_linear_combination(op, list, tol, b, ctx);
}

}  // namespace

TEST_SUITE("phikry") {
  TEST_CASE("augmented operator equals the assembled block matrix") {
    const std::size_t n = 5, p = 3;
    const DenseMatrix J = random_matrix(n, n, 1);
    std::vector<Vector> bl;
    for (std::size_t k = 0; k < p; ++k) bl.push_back(random_vector(n, 10 + k));
    const double js = 0.7, bs = 0.25;
    AugmentedOperator aug(dense_operator(J), bl, js, bs);
    CHECK(aug.size() == n + p);

    // [[js J, bs B], [0, K]], B = [v_p .. v_1], K = upper shift.
    DenseMatrix A(n + p, n + p);
    for (std::size_t c = 0; c < n; ++c)
      for (std::size_t r = 0; r < n; ++r) A(r, c) = js * J(r, c);
    for (std::size_t c = 0; c < p; ++c)
      for (std::size_t r = 0; r < n; ++r) A(r, n + c) = bs * bl[p - 1 - c][r];
    for (std::size_t c = 0; c + 1 < p; ++c) A(n + c, n + c + 1) = 1.0;

    const Vector x = random_vector(n + p, 20);
    Vector y(n + p);
    aug.apply(x, y);
    CHECK(max_abs_diff(y, matvec(A, x)) < 1e-14);

    const std::vector<Vector> only_v0{random_vector(n, 21)};
    const AugmentedSystem plain = build_augmented(dense_operator(J), only_v0, 1.0);
    CHECK(plain.op.size() == n);
    CHECK(plain.initial == only_v0[0]);
    Vector short_y(n);
    CHECK_THROWS_AS(aug.apply(x, short_y), DimensionError);
  }

  TEST_CASE("augmented exponential gives the phi combination") {
    const std::size_t n = 6;
    const DenseMatrix J = random_matrix(n, n, 2);
    const std::vector<Vector> list{random_vector(n, 3), random_vector(n, 4), random_vector(n, 5),
                                   random_vector(n, 6)};
    const double tau = 0.8;
    const AugmentedSystem sys = build_augmented(dense_operator(J), list, tau);
    const std::size_t N = sys.op.size();
    DenseMatrix A(N, N);
    Vector e(N, 0.0), col(N);
    for (std::size_t c = 0; c < N; ++c) {
      e.assign(N, 0.0);
      e[c] = 1.0;
      sys.op.apply(e, col);
      for (std::size_t r = 0; r < N; ++r) A(r, c) = col[r];
    }
    const Vector full = matvec(taylor_expm(A), sys.initial);
    const Vector top(full.begin(), full.begin() + static_cast<std::ptrdiff_t>(n));
    DenseMatrix tJ = J;
    tJ *= tau;
    const Vector ref = phi_combination_quadrature(tJ, list);
    CHECK(rel_diff(top, ref) < 1e-12);
  }

  TEST_CASE("krylov_exp_projection") {
    SUBCASE("zero operator returns b") {
      ReductionContext ctx;
      const Vector b = random_vector(7, 30);
      const KrylovState s = arnoldi_mgs(zero_operator(), b, 4, ctx);
      CHECK(s.happy);
      CHECK(s.j == 1);
      CHECK(max_abs_diff(krylov_exp_projection(s, 1.0), b) < 1e-15);
    }
    SUBCASE("eigenvector start is exact") {
      DenseMatrix d(4, 4);
      const double lam[] = {-1.0, 0.5, 2.0, -3.0};
      for (std::size_t i = 0; i < 4; ++i) d(i, i) = lam[i];
      Vector ek(4, 0.0);
      ek[2] = 1.0;
      ReductionContext ctx;
      const KrylovState s = arnoldi_mgs(dense_operator(d), ek, 3, ctx);
      const Vector y = krylov_exp_projection(s, 1.0);
      CHECK(std::abs(y[2] - std::exp(2.0)) < 1e-12 * std::exp(2.0));
    }
    SUBCASE("full dimension is exact") {
      DenseMatrix a = random_matrix(30, 30, 31);
      a *= 3.0 / norm_one(a);
      const Vector b = random_vector(30, 32);
      ReductionContext ctx;
      ArnoldiProcess p(dense_operator(a), b, 30, {}, ctx);
      p.extend(30);
      const Vector y = krylov_exp_projection(p.state(), 1.0);
      CHECK(rel_diff(y, matvec(taylor_expm(a), b)) < 1e-11);
    }
  }

  TEST_CASE("trivial phi combinations") {
    const Vector b = random_vector(9, 40);
    for (OrthoBackend bk : kAllBackends) {
      CAPTURE(to_string(bk));
      const PhiResult r = evaluate(bk, zero_operator(), {Vector(9, 0.0), b});
      CHECK(max_abs_diff(r.outputs.front(), b) < 1e-14);
    }
    // Scalar closed form u e^{-1} + f (1 - e^{-1}).
    const DenseMatrix m1{{-1.0}};
    const double u = 0.7, f = -0.3;
    const PhiResult r = evaluate(OrthoBackend::Mgs, dense_operator(m1), {Vector{u}, Vector{f}});
    CHECK(std::abs(r.outputs[0][0] - (u * std::exp(-1.0) + f * (1.0 - std::exp(-1.0)))) < 1e-12);
    // p = 0 is the plain exponential.
    const DenseMatrix a = random_matrix(8, 8, 41);
    const Vector v = random_vector(8, 42);
    const PhiResult e = evaluate(OrthoBackend::Mgs, dense_operator(a), {v});
    CHECK(rel_diff(e.outputs[0], matvec(taylor_expm(a), v)) < 1e-10);
  }

  TEST_CASE("engine matches the quadrature oracle for every backend") {
    for (std::uint64_t seed = 50; seed < 53; ++seed) {
      const std::size_t n = 20;
      DenseMatrix J = random_matrix(n, n, seed);
      J *= 4.0 / norm_one(J);
      std::vector<Vector> list;
      for (std::size_t k = 0; k <= 3; ++k) list.push_back(random_vector(n, seed * 10 + k));
      const Vector ref = phi_combination_oracle(J, list);
      for (OrthoBackend bk : kAllBackends) {
        CAPTURE(to_string(bk));
        const PhiResult r = evaluate(bk, dense_operator(J), list);
        CHECK(rel_diff(r.outputs[0], ref) < 1e-10);
        CHECK(r.stats.substeps >= 1);
        CHECK(r.stats.max_error_estimate <= 1e-12);
      }
    }
  }

  TEST_CASE("multiple output times from one call") {
    const std::size_t n = 12;
    DenseMatrix J = random_matrix(n, n, 60);
    J *= 3.0 / norm_one(J);
    const std::vector<Vector> list{random_vector(n, 61), random_vector(n, 62),
                                   random_vector(n, 63)};
    ReductionContext ctx;
    PhiEngine eng({}, ctx);
    const double taus[] = {0.3, 0.55, 1.0};
    const PhiResult r = eng.evaluate(dense_operator(J), list, taus);
    CHECK(eng.calls() == 1);
    REQUIRE(r.outputs.size() == 3);
    for (std::size_t i = 0; i < 3; ++i)
      CHECK(rel_diff(r.outputs[i], phi_combination_oracle(J, list, taus[i])) < 1e-10);
    const double bad[] = {0.5, 0.2};
    CHECK_THROWS_AS(eng.evaluate(dense_operator(J), list, bad), InvalidInput);
  }

  TEST_CASE("stiff Laplacian forces substepping and stays accurate") {
    const std::size_t g = 32;
    const LinearOperator op = dirichlet_laplacian_op(g, 1e-2);
    const std::size_t n = g * g;
    const std::vector<Vector> list{random_vector(n, 70), random_vector(n, 71),
                                   random_vector(n, 72)};
    const Vector ref = laplacian_phi_oracle(g, 1e-2, list);

    Vector first;
    for (OrthoBackend bk : kAllBackends) {
      CAPTURE(to_string(bk));
      const PhiResult r = evaluate(bk, op, list);
      CHECK(r.stats.substeps > 1);
      CHECK(rel_diff(r.outputs[0], ref) < 1e-10);
      if (first.empty())
        first = r.outputs[0];
      else
        CHECK(rel_diff(r.outputs[0], first) < 1e-8);
    }
  }

  TEST_CASE("stats reconcile with the reduction log") {
    const LinearOperator op = dirichlet_laplacian_op(16, 1e-2);
    const std::vector<Vector> list{random_vector(256, 80), random_vector(256, 81)};
    for (OrthoBackend bk : kAllBackends) {
      CAPTURE(to_string(bk));
      ReductionContext ctx;
      PhiOptions o;
      o.arnoldi.backend = bk;
      PhiEngine eng(o, ctx);
      const PhiResult r = eng.evaluate(op, list);
      CHECK(r.stats.sync_count == ctx.sync_count());
      if (is_hybrid(bk)) {
        CHECK(r.stats.reduces_grouped == ctx.count_tag(tags::kHybridGrouped));
        CHECK(r.stats.reduces_fallback == ctx.count_tag(tags::kHybridFallbackNorm));
        CHECK(ctx.sync_count() == r.stats.arnoldi_steps + ctx.count_tag(tags::kFinalNorm) +
                                      r.stats.reduces_fallback);
      }
      if (bk == OrthoBackend::IoCgs) CHECK(ctx.sync_count() == 2 * r.stats.arnoldi_steps);
      CHECK(eng.totals().substeps == r.stats.substeps);
    }
  }

  TEST_CASE("invalid arguments") {
    ReductionContext ctx;
    CHECK_THROWS_AS(PhiEngine(PhiOptions{.tol = 0.0}, ctx), InvalidInput);
    PhiEngine eng({}, ctx);
    const std::vector<Vector> ragged{Vector(3), Vector(4)};
    CHECK_THROWS_AS(eng.evaluate(zero_operator(), ragged), InvalidInput);
    CHECK_THROWS_AS(eng.evaluate(zero_operator(), std::vector<Vector>{}), InvalidInput);
  }

  TEST_CASE("convergence failure is reported with stats") {
    ReductionContext ctx;
    PhiOptions o;
    o.max_substeps = 3;
    o.m_init = 2;
    o.m_max = 2;
    PhiEngine eng(o, ctx);
    const std::vector<Vector> list{random_vector(256, 90)};
    try {
      eng.evaluate(dirichlet_laplacian_op(16, 1.0), list);
      FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
      CHECK(e.stats().substeps + e.stats().rejects >= 3);
    }
  }
}
