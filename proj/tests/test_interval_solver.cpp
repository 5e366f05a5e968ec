#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "condlab/environment.hpp"
#include "condlab/interval_solver.hpp"

using namespace condlab;

namespace {

Environment homogeneous_env(long half, std::vector<double> profile) {
  EnvironmentSpec s;
  s.model_tag = "homogeneous";
  s.x_min = -half;
  s.x_max = half;
  s.kappa = 0.01;
  s.profile = std::move(profile);
  return generate(s);
}

Environment tworange_env(long half, std::uint64_t seed) {
  EnvironmentSpec s;
  s.model_tag = "iid-tworange";
  s.x_min = -half;
  s.x_max = half;
  s.kappa = 0.5;
  s.seed = seed;
  return generate(s);
}

}  // namespace

TEST_SUITE("interval_solver") {

TEST_CASE("collapsed chain: stochastic rows, boundary pull, detailed balance") {
  // Deterministic two-range profile: C_x = 2*1 + 2*0.05 = 2.1 everywhere.
  const Environment env = homogeneous_env(50, {1.0, 0.05});
  const IntervalProblem pr = build_collapsed_chain(env, 0, 4, Geometry::kTwoSided);
  REQUIRE(pr.m() == 3);  // interior 1, 2, 3
  const int rows = static_cast<int>(pr.P.rows());
  REQUIRE(rows == 5);
  for (int i = 0; i < rows; ++i) CHECK(pr.P.row(i).sum() == doctest::Approx(1.0).epsilon(1e-13));
  // From 1, the left boundary absorbs omega(1,0)+omega(1,-1) = 1.05 of C = 2.1.
  CHECK(pr.P(pr.idx(1), pr.delta_B()) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(pr.detailed_balance_residual() <= 1e-12);

  const IntervalProblem pl = build_collapsed_chain(env, 0, 4, Geometry::kPuncturedLine);
  for (int i = 0; i < static_cast<int>(pl.P.rows()); ++i)
    CHECK(pl.P.row(i).sum() == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(pl.detailed_balance_residual() <= 1e-12);
}

TEST_CASE("gambler's ruin, midpoint exit time, escape from the origin") {
  const Environment env = homogeneous_env(60, {1.0});
  const IntervalProblem pr = build_collapsed_chain(env, 0, 10, Geometry::kPuncturedLine);
  for (long x = 1; x <= 9; ++x) {
    const ExitDistribution dist = exit_distribution(pr, x);
    REQUIRE(dist.probabilities.size() == 2);
    CHECK(dist.probabilities.front().first == 0);
    CHECK(dist.probabilities.back().first == 10);
    CHECK(std::abs(dist.probabilities.back().second - static_cast<double>(x) / 10.0) <= 1e-12);
    CHECK(std::abs(dist.total() - 1.0) <= 1e-12);
  }
  CHECK(std::abs(expected_exit_time(pr, 5) - 25.0) <= 1e-10);
  CHECK(std::abs(escape_probability(env, 10) - 0.1) <= 1e-12);
  CHECK(std::abs(escape_probability(env, 25) - 0.04) <= 1e-12);
}

TEST_CASE("escape probability equals the energy of its harmonic profile") {
  const long L = 10;
  const Environment env = homogeneous_env(40, {1.0});
  const EscapeSolution sol = escape_solution(env, L);
  CHECK(sol.at(0) == 0.0);
  CHECK(sol.at(L) == 1.0);
  CHECK(sol.at(-L - 1) == 1.0);
  const double phi =
      dirichlet_form(env, [&](long x) { return sol.at(x); }, sol.lo, -sol.lo);
  // Linear ramps on both arms: ordered-pair energy 2 * 2/L.
  CHECK(phi == doctest::Approx(4.0 / static_cast<double>(L)).epsilon(1e-12));
  CHECK(std::abs(sol.probability - phi / (2.0 * env.total_conductance(0))) <= 1e-12);

  // Any non-harmonic competitor pays strictly more energy.
  const double worse = dirichlet_form(
      env, [&](long x) { return x == 0 ? 0.0 : 1.0; }, sol.lo, -sol.lo);
  CHECK(worse > phi);
}

TEST_CASE("effective conductance: series law and monotonicity in the edges") {
  const Environment env = homogeneous_env(40, {1.0});
  const IntervalProblem pr = build_collapsed_chain(env, -8, 8, Geometry::kPuncturedLine);
  for (long x : {-5L, -1L, 3L}) {
    const double expect = 1.0 / static_cast<double>(x + 8) + 1.0 / static_cast<double>(8 - x);
    CHECK(effective_conductance(pr, x) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(effective_conductance_series_bound(pr, x) == doctest::Approx(expect).epsilon(1e-12));
  }

  const Environment rnd = tworange_env(40, 311);
  const IntervalProblem pra = build_collapsed_chain(rnd, -8, 8, Geometry::kPuncturedLine);
  for (long x : {-4L, 0L, 5L}) {
    const double ce = effective_conductance(pra, x);
    CHECK(ce >= effective_conductance_series_bound(pra, x) - 1e-12);
    // Raising one edge's conductance cannot lower the effective conductance.
    const Environment up = rnd.with_conductance(x, x + 1, rnd.conductance(x, x + 1) + 1.0);
    const IntervalProblem prb = build_collapsed_chain(up, -8, 8, Geometry::kPuncturedLine);
    CHECK(effective_conductance(prb, x) >= ce - 1e-12);
  }
}

TEST_CASE("commute time against the hand-computed network value") {
  const Environment env = homogeneous_env(30, {1.0});
  const IntervalProblem pr = build_collapsed_chain(env, 0, 4, Geometry::kTwoSided);
  const auto [lhs, rhs] = commute_time_check(pr, 2);
  // Mass 8, resistance 2 between site 2 and the left boundary state.
  CHECK(lhs == doctest::Approx(16.0).epsilon(1e-12));
  CHECK(rhs == doctest::Approx(16.0).epsilon(1e-12));
}

TEST_CASE("time-reversal identity on random fields") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    const Environment env = tworange_env(30, seed);
    const IntervalProblem pr = build_collapsed_chain(env, -6, 6, Geometry::kPuncturedLine);
    // x is interior; y ranges over the materialized exit sites of a radius-2 field.
    for (auto [x, y] : {std::pair<long, long>{-2, 6}, {1, -6}, {-5, 7}, {2, -7}}) {
      const auto [lhs, rhs] = reversal_identity_check(pr, x, y);
      CHECK(std::abs(lhs - rhs) / std::max(std::abs(lhs), std::abs(rhs)) <= 1e-10);
    }
  }
}

TEST_CASE("confinement decays at the spectral rate of the killed chain") {
  const Environment env = homogeneous_env(30, {1.0});
  const IntervalProblem pr = build_collapsed_chain(env, 0, 10, Geometry::kTwoSided);
  std::vector<long> ns;
  for (long n = 200; n <= 1600; n += 200) ns.push_back(n);
  const std::vector<double> curve = confinement_log_curve(pr, 5, ns);
  REQUIRE(curve.size() == ns.size());
  for (std::size_t i = 0; i < ns.size(); ++i) {
    CHECK(curve[i] == doctest::Approx(confinement_log_tail(pr, 5, ns[i])).epsilon(1e-9));
    if (i > 0) CHECK(curve[i] < curve[i - 1]);
    CHECK(std::exp(curve[i]) == doctest::Approx(confinement_tail(pr, 5, ns[i])).epsilon(1e-9));
  }
  const RateFit fit = fit_tail_rate(ns, curve);
  CHECK(fit.lambda == doctest::Approx(-std::log(std::cos(M_PI / 10.0))).epsilon(1e-4));
  CHECK(fit.rel_variation < 1e-6);
}

TEST_CASE("exit mass concentrates monotonically around the interval") {
  const Environment env = [&] {
    EnvironmentSpec s;
    s.model_tag = "iid-polynomial";
    s.x_min = -300;
    s.x_max = 300;
    s.kappa = 0.5;
    s.tail_K = 4.0;
    s.tail_beta = 2.0;
    s.seed = 12;
    return generate(s);
  }();
  const IntervalProblem pr = build_collapsed_chain(env, -12, 12, Geometry::kPuncturedLine);
  const ExitDistribution dist = exit_distribution(pr, 3);
  CHECK(std::abs(dist.total() - 1.0) <= 1e-10);
  double prev = -1.0;
  for (long M = 0; M <= 60; M += 5) {
    const double mass = dist.mass_inside(M);
    CHECK(mass >= prev);
    prev = mass;
  }
  CHECK(dist.mass_inside(300) == doctest::Approx(dist.total()).epsilon(1e-14));
  for (std::size_t i = 1; i < dist.probabilities.size(); ++i)
    CHECK(dist.probabilities[i - 1].first < dist.probabilities[i].first);
}

TEST_CASE("field constants on a simple profile") {
  const Environment env = homogeneous_env(30, {1.0});
  const FieldConstants fc = field_constants(env, -20, 20);
  CHECK(fc.gamma1 == doctest::Approx(2.0));
  CHECK(fc.c_min == doctest::Approx(2.0));
  CHECK(fc.c_max == doctest::Approx(2.0));
  CHECK(fc.kappa_hat == doctest::Approx(0.5));

  const Environment two = homogeneous_env(30, {1.0, 0.05});
  const FieldConstants f2 = field_constants(two, -20, 20);
  CHECK(f2.gamma1 == doctest::Approx(2.0 + 2.0 * 0.05 * 4.0));
  CHECK(f2.c_min == doctest::Approx(2.1));
}

TEST_CASE("tail-rate fit recovers an exact linear decay") {
  std::vector<long> ns;
  std::vector<double> logs;
  for (long n = 10; n <= 80; n += 10) {
    ns.push_back(n);
    logs.push_back(2.0 - 0.3 * static_cast<double>(n));
  }
  const RateFit fit = fit_tail_rate(ns, logs);
  CHECK(fit.lambda == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(fit.rel_variation <= 1e-10);
  CHECK_THROWS_AS(fit_tail_rate({1, 2, 3}, {0.0, -1.0, -2.0}), std::invalid_argument);
}

}  // TEST_SUITE
