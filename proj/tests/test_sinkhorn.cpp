#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "otkit/core.hpp"
#include "otkit/rng.hpp"
#include "otkit/sinkhorn.hpp"

#include <cmath>

using namespace otkit;

namespace {

Histogram half_half() {
  Vector v(2);
  v << 0.5, 0.5;
  return Histogram{v};
}

CostKernelPair swap_cost(double eps) {
  Matrix c(2, 2);
  c << 0, 1, 1, 0;
  return build_kernel(c, eps);
}

SolveOptions tight() {
  SolveOptions o;
  o.max_iters = 20000;
  o.tolerance = 1e-9;
  return o;
}

}  // namespace

TEST_CASE("vanilla matches the 2x2 closed form and the grid oracle") {
  for (double eps : {1.0, 0.5, 0.2}) {
    const SinkhornResult res =
        solve_vanilla(half_half(), half_half(), swap_cost(eps), tight());
    const double closed = 0.5 * oracles::sigmoid(1.0 / eps);
    CHECK(std::abs(res.coupling.plan(0, 0) - closed) < 1e-6);
    CHECK(std::abs(oracles::two_by_two_grid_argmin(eps) - closed) < 1e-4);
    CHECK(res.converged);
  }
}

TEST_CASE("zero cost gives the independence coupling after one iteration") {
  Rng rng(2);
  const Histogram a{rng.simplex(4)};
  const Histogram b{rng.simplex(5)};
  const CostKernelPair ck = build_kernel(Matrix::Zero(4, 5), 1.0);
  SolveOptions one;
  one.max_iters = 1;
  one.fixed_iters = true;
  const SinkhornResult res = solve_vanilla(a, b, ck, one);
  const Matrix outer = a.values * b.values.transpose();
  CHECK((res.coupling.plan - outer).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("single-cell problem returns the full mass") {
  const Histogram one{Vector::Ones(1)};
  const CostKernelPair ck = build_kernel(Matrix::Constant(1, 1, 0.7), 0.5);
  const SinkhornResult res = solve_vanilla(one, one, ck, tight());
  CHECK(res.coupling.plan(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("log solver agrees with vanilla on the closed-form instance") {
  const SinkhornResult lv =
      solve_vanilla(half_half(), half_half(), swap_cost(1.0), tight());
  const SinkhornResult ll =
      solve_log(half_half(), half_half(), swap_cost(1.0), tight());
  CHECK((lv.coupling.plan - ll.coupling.plan).cwiseAbs().maxCoeff() < 1e-8);

  // zero cost in log mode
  Rng rng(2);
  const Histogram a{rng.simplex_positive(4)};
  const Histogram b{rng.simplex_positive(5)};
  const SinkhornResult res =
      solve_log(a, b, build_kernel(Matrix::Zero(4, 5), 1.0), tight());
  CHECK((res.coupling.plan - a.values * b.values.transpose())
            .cwiseAbs()
            .maxCoeff() < 1e-9);
}

TEST_CASE("log mode survives where vanilla overflows") {
  Rng rng(7);
  const Histogram a{rng.simplex_positive(8, 1e-3)};
  const Histogram b{rng.simplex_positive(8, 1e-3)};
  const CostKernelPair ck =
      build_kernel(rng.matrix_uniform(8, 8, 0.0, 10.0), 1e-3);
  SolveOptions o;
  o.max_iters = 500;
  o.tolerance = 1e-9;

  CHECK_THROWS_AS(solve_vanilla(a, b, ck, o), Error);
  try {
    solve_vanilla(a, b, ck, o);
  } catch (const Error& e) {
    CHECK(e.is_numeric_overflow());
  }

  const SinkhornResult res = solve_log(a, b, ck, o);
  CHECK(res.coupling.plan.allFinite());
  CHECK(res.state.f.allFinite());
  CHECK(res.state.g.allFinite());
}

TEST_CASE("log solver rejects zero-mass entries") {
  Vector withzero(3);
  withzero << 0.5, 0.5, 0.0;
  Histogram a;
  a.values = withzero;  // bypasses validation on purpose
  try {
    solve_log(a, half_half(), build_kernel(Matrix::Zero(3, 2), 1.0), tight());
    FAIL("expected NonPositiveHistogram");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonPositiveHistogram);
  }
}

TEST_CASE("cross-solver agreement on random instances") {
  Rng rng(31);
  for (int rep = 0; rep < 12; ++rep) {
    const int M = 2 + static_cast<int>(rng.below(19));
    const int N = 2 + static_cast<int>(rng.below(24));
    const double eps = rng.uniform(0.05, 1.0);
    const Histogram a{rng.simplex_positive(M, 1e-3)};
    const Histogram b{rng.simplex_positive(N, 1e-3)};
    const CostKernelPair ck =
        build_kernel(rng.matrix_uniform(M, N, 0.0, 1.0), eps);
    const SinkhornResult rv = solve_vanilla(a, b, ck, tight());
    const SinkhornResult rl = solve_log(a, b, ck, tight());
    REQUIRE(rv.converged);
    REQUIRE(rl.converged);
    CHECK((rv.coupling.plan - rl.coupling.plan).cwiseAbs().maxCoeff() < 1e-6);

    // feasibility at convergence
    CHECK((rv.coupling.plan.rowwise().sum() - a.values).cwiseAbs().maxCoeff() <
          1e-8);
    CHECK((rv.coupling.plan.colwise().sum().transpose() - b.values)
              .cwiseAbs()
              .maxCoeff() < 1e-8);
  }
}

TEST_CASE("coupling is invariant to the v initialization") {
  Rng rng(19);
  const Histogram a{rng.simplex_positive(5)};
  const Histogram b{rng.simplex_positive(6)};
  const CostKernelPair ck =
      build_kernel(rng.matrix_uniform(5, 6, 0.0, 1.0), 0.4);
  const SinkhornResult base = solve_vanilla(a, b, ck, tight());
  const SinkhornResult doubled =
      solve_vanilla(a, b, ck, tight(), Vector::Constant(6, 2.0));
  CHECK((base.coupling.plan - doubled.coupling.plan).cwiseAbs().maxCoeff() <
        1e-8);
  // u and v themselves are only defined up to a constant
  CHECK((base.state.v - doubled.state.v).cwiseAbs().maxCoeff() > 1e-12);
}

TEST_CASE("log potentials reproduce a feasible coupling") {
  Rng rng(23);
  const Histogram a{rng.simplex_positive(6)};
  const Histogram b{rng.simplex_positive(4)};
  const CostKernelPair ck =
      build_kernel(rng.matrix_uniform(6, 4, 0.0, 1.0), 0.3);
  const SinkhornResult res = solve_log(a, b, ck, tight());
  REQUIRE(res.converged);
  const Matrix P =
      (-residual_matrix(res.state.f, res.state.g, ck.cost).array() /
       ck.epsilon)
          .exp();
  CHECK((P.rowwise().sum() - a.values).cwiseAbs().maxCoeff() < 10 * 1e-9);
  CHECK((P.colwise().sum().transpose() - b.values).cwiseAbs().maxCoeff() <
        10 * 1e-9);
  // f = eps log u within round-off
  CHECK((res.state.f - ck.epsilon * res.state.u.array().log().matrix())
            .cwiseAbs()
            .maxCoeff() < 1e-10);
}

TEST_CASE("transport cost decreases toward the unregularized optimum") {
  // the 1-parameter polytope has endpoints p = 0 (cost 1) and p = 0.5
  // (cost 0); the linear cost is minimized at the p = 0.5 endpoint
  const double lp_optimum = std::min(oracles::two_by_two_loss(0.0, 0.0),
                                     oracles::two_by_two_loss(0.5, 0.0));
  CHECK(lp_optimum == 0.0);
  double prev = 2.0;
  for (double eps : {1.0, 0.3, 0.1, 0.03}) {
    const SinkhornResult res =
        solve_vanilla(half_half(), half_half(), swap_cost(eps), tight());
    const double cost = res.coupling.plan.cwiseProduct(swap_cost(eps).cost).sum();
    CHECK(cost < prev);
    CHECK(cost >= lp_optimum);
    prev = cost;
  }
  CHECK(prev < 1e-4);
}

TEST_CASE("parallel solver equals per-column vanilla") {
  Rng rng(41);
  const int M = 5, N = 6, S = 3;
  Matrix A(M, S), B(N, S);
  for (int s = 0; s < S; ++s) {
    A.col(s) = rng.simplex_positive(M);
    B.col(s) = rng.simplex_positive(N);
  }
  const CostKernelPair ck =
      build_kernel(rng.matrix_uniform(M, N, 0.0, 1.0), 0.4);

  SolveOptions fixed;
  fixed.max_iters = 300;
  fixed.fixed_iters = true;
  const auto batch =
      solve_parallel(HistogramBatch{A}, HistogramBatch{B}, ck, fixed);
  REQUIRE(batch.size() == S);
  for (int s = 0; s < S; ++s) {
    const SinkhornResult single = solve_vanilla(
        Histogram{A.col(s)}, Histogram{B.col(s)}, ck, fixed);
    CHECK((batch[s].coupling.plan - single.coupling.plan)
              .cwiseAbs()
              .maxCoeff() < 1e-10);
  }
}

TEST_CASE("parallel solver: duplicated columns and degenerate batch") {
  Rng rng(43);
  const Histogram a{rng.simplex_positive(4)};
  const Histogram b{rng.simplex_positive(4)};
  const CostKernelPair ck =
      build_kernel(rng.matrix_uniform(4, 4, 0.0, 1.0), 0.5);

  Matrix A(4, 2), B(4, 2);
  A << a.values, a.values;
  B << b.values, b.values;
  const auto twin = solve_parallel(HistogramBatch{A}, HistogramBatch{B}, ck,
                                   tight());
  CHECK((twin[0].coupling.plan - twin[1].coupling.plan).cwiseAbs().maxCoeff() ==
        0.0);

  const auto lone = solve_parallel(HistogramBatch{a.values},
                                   HistogramBatch{b.values}, ck, tight());
  const SinkhornResult single = solve_vanilla(a, b, ck, tight());
  CHECK((lone[0].coupling.plan - single.coupling.plan).cwiseAbs().maxCoeff() <
        1e-12);

  Matrix B3(4, 3);
  B3 << b.values, b.values, b.values;
  CHECK_THROWS_AS(
      solve_parallel(HistogramBatch{A}, HistogramBatch{B3}, ck, tight()),
      Error);
}
