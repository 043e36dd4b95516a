#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "polyflux/variational.hpp"

using namespace polyflux;

namespace {

Kernel abs_kernel() { return SharpKernel{conjugate(make_pwl({0}, {-1, 1}, 0))}; }
InitialData parabola() {
  return ClosedFormC1([](double y) { return y * y; }, [](double y) { return 2 * y; }, -10, 10);
}

// g = -y^2 restricted to [-1, b] through the search window.
std::pair<InitialData, SearchConfig> worked_example(double b) {
  SearchConfig cfg;
  cfg.window = std::pair{-1.0, b};
  return {ClosedFormC1([](double y) { return -y * y; }, [](double y) { return -2 * y; }, -1, b), cfg};
}

const ConjugateFn& dead_zone_l() {
  static const ConjugateFn l = conjugate(make_pwl({-1, 1}, {-1, 0, 1}, 0));
  return l;
}

}  // namespace

TEST(FunctionalQ, Values) {
  EXPECT_DOUBLE_EQ(functional_q(abs_kernel(), parabola(), 0, 1, 0.5).value(), 0.25);
  EXPECT_TRUE(functional_q(abs_kernel(), parabola(), 0, 1, 2).is_infinite());
  auto [g, cfg] = worked_example(1.5);
  EXPECT_NEAR(functional_q(TestQuadraticKernel{}, g, 0, 1, 0.7).value(), 0.0, 1e-15);
  EXPECT_THROW(functional_q(abs_kernel(), parabola(), 0, 0, 0), DomainError);
  EXPECT_THROW(functional_q(abs_kernel(), parabola(), 0, -1, 0), DomainError);
}

TEST(GreatestMinimizer, InteriorFlatSegment) {
  const auto r = greatest_minimizer(abs_kernel(), parabola(), 0.5, 1);
  // Isolated smooth minimum: the tie band must not move it.
  EXPECT_NEAR(r.y_star, 0.0, 1e-14);
  EXPECT_FALSE(r.multiple);
  EXPECT_NEAR(r.q_min, 0.0, 1e-12);
  EXPECT_EQ(r.kind, MinimizerKind::kFlatSegment);
}

TEST(GreatestMinimizer, EndpointIsVertex) {
  const auto r = greatest_minimizer(abs_kernel(), parabola(), 2, 1);
  EXPECT_NEAR(r.y_star, 1.0, 1e-8);
  EXPECT_NEAR(r.q_min, 1.0, 1e-12);
  EXPECT_EQ(r.kind, MinimizerKind::kVertexOfL);
}

TEST(GreatestMinimizer, ContinuumTakesRightEnd) {
  for (double b : {0.5, 1.5}) {
    auto [g, cfg] = worked_example(b);
    const auto r = greatest_minimizer(TestQuadraticKernel{}, g, 0, 1, cfg);
    EXPECT_TRUE(r.multiple);
    EXPECT_EQ(r.y_star, b);
    for (const auto& c : r.candidates) EXPECT_LE(c.q, r.q_min + cfg.tie_eta * (1 + std::abs(r.q_min)));
  }
}

TEST(GreatestMinimizer, FlatRunExtendsToLastTie) {
  // Q = t L((x - y)/t) + g with L = |p| and g' = 1 on y < 0: Q is constant on
  // [x - t, 0] for x in (0, t); the right end must be found by bisection.
  const InitialData g = ClosedFormC1([](double y) { return y < 0 ? y : y + y * y; },
                                     [](double y) { return y < 0 ? 1.0 : 1.0 + 2 * y; }, -5, 5, false);
  const Kernel k{SharpKernel{dead_zone_l()}};
  SearchConfig cfg;
  const auto r = greatest_minimizer(k, g, 0.5, 1.0, cfg);
  // Right of 0, Q - q_min = y^2: the last tie sits at sqrt(eta (1 + |q_min|)).
  const double edge = std::sqrt(cfg.tie_eta * (1.0 + std::abs(r.q_min)));
  EXPECT_NEAR(r.y_star, edge, 1e-9);
  EXPECT_TRUE(r.multiple);
  cfg.tie_eta = 1e-14;
  EXPECT_NEAR(greatest_minimizer(k, g, 0.5, 1.0, cfg).y_star, std::sqrt(1e-14 * 1.5), 1e-9);
}

TEST(GreatestMinimizer, StaysFeasibleAndMonotone) {
  const Kernel k{SharpKernel{conjugate(make_pwl({-1, 0.5, 2}, {-2, -0.5, 1, 3}, 1))}};
  const InitialData g = ClosedFormC1([](double y) { return std::sin(3 * y) + 0.1 * y * y; },
                                     [](double y) { return 3 * std::cos(3 * y) + 0.2 * y; }, -20, 20);
  double prev = -INFINITY;
  for (int i = 0; i <= 200; ++i) {
    const double x = -4 + 8.0 * i / 200;
    const auto r = greatest_minimizer(k, g, x, 0.7);
    EXPECT_GE(r.y_star, x - 3 * 0.7 - 1e-12);
    EXPECT_LE(r.y_star, x + 2 * 0.7 + 1e-12);
    EXPECT_GE(r.y_star, prev - 1e-12);
    prev = r.y_star;
    // Oracle: dense grid minimum over the feasible window.
    const auto [arg, best] = oracle::grid_min(
        [&](double y) { return functional_q(k, g, x, 0.7, y).value(); }, x - 2.1, x + 1.4, 200000);
    EXPECT_LE(r.q_min, best + 1e-12);
    EXPECT_NEAR(r.q_min, best, 1e-6);
  }
}

TEST(GreatestMinimizer, DegenerateWindow) {
  // The whole window is inside the default tie band.
  SearchConfig cfg;
  cfg.tie_eta = 1e-15;
  const auto r = greatest_minimizer(abs_kernel(), parabola(), 0.3, 1e-9, cfg);
  EXPECT_NEAR(r.y_star, 0.3 - 1e-9, 1e-12);
  EXPECT_NEAR(r.q_min, 0.09, 1e-9);
}

TEST(GreatestMinimizer, DivergesForUnboundedSmoothKernel) {
  SmoothKernel k{[](double p) { return p * p; }, [](double p) { return 2 * p; }, -1, 1};
  const InitialData g = ClosedFormC1([](double y) { return -y * y * y * y; },
                                     [](double y) { return -4 * y * y * y; }, -50, 50);
  EXPECT_THROW(greatest_minimizer(k, g, 0, 1), DivergenceError);
}

TEST(GreatestMinimizer, SampledPathExactRouteMatchesGrid) {
  const auto path = sample_brownian(-4, 4, 0.05, 31);
  const InitialData g = path;
  const auto l = conjugate(make_pwl({-1, 1}, {-1, 0, 1}, 0));
  for (double x : {-1.0, 0.0, 0.4, 1.3}) {
    const auto r = greatest_minimizer(SharpKernel{l}, g, x, 1.0);
    const auto [arg, best] = oracle::grid_min(
        [&](double y) { return functional_q(SharpKernel{l}, g, x, 1.0, y).value(); }, x - 1, x + 1, 400000);
    EXPECT_NEAR(r.q_min, best, 1e-8);
    EXPECT_LE(r.q_min, best + 1e-14);
  }
}

TEST(EvalU, Examples) {
  EXPECT_NEAR(eval_u(abs_kernel(), parabola(), 0, 1), 0.0, 1e-12);
  EXPECT_NEAR(eval_u(abs_kernel(), parabola(), 2, 1), 1.0, 1e-12);
  EXPECT_EQ(eval_u(abs_kernel(), parabola(), 1.7, 0), 1.7 * 1.7);
}

TEST(EvalW, Examples) {
  EXPECT_NEAR(eval_w(abs_kernel(), parabola(), 0.5, 1), 0.0, 1e-6);
  EXPECT_NEAR(eval_w(abs_kernel(), parabola(), 2, 1), 2.0, 1e-8);
  EXPECT_NEAR(eval_w(abs_kernel(), parabola(), -2, 1), -2.0, 1e-8);
}

TEST(MinXDerivative, Examples) {
  const double h[] = {1e-3, 5e-4, 2.5e-4};
  auto [g, cfg] = worked_example(1.5);
  const auto d = min_x_derivative(TestQuadraticKernel{}, g, 0, 1, h, cfg);
  EXPECT_NEAR(d.value, -3.0, 1e-6);
  EXPECT_TRUE(d.shock);  // left derivative is +2
  EXPECT_NEAR(min_x_derivative(abs_kernel(), parabola(), 2, 1, h).value, 2.0, 1e-6);
  EXPECT_NEAR(min_x_derivative(abs_kernel(), parabola(), 0, 1, h).value, 0.0, 1e-6);
  EXPECT_THROW(min_x_derivative(abs_kernel(), parabola(), 0, 0, h), DomainError);
}

TEST(MinXDerivative, AgreesWithEvalWOffShocks) {
  const Kernel k{SharpKernel{conjugate(make_pwl({-1, 0.5}, {-1, 0.2, 2}, 0))}};
  const InitialData g = ClosedFormC1([](double y) { return std::cos(y); }, [](double y) { return -std::sin(y); }, -20, 20);
  const double h[] = {1e-3, 5e-4, 2.5e-4};
  for (double x = -3; x <= 3; x += 0.37) {
    const auto d = min_x_derivative(k, g, x, 0.8, h);
    if (d.shock) continue;
    EXPECT_NEAR(d.value, eval_w(k, g, x, 0.8), 10 * h[2]) << x;
  }
}

TEST(SemigroupResidual, Examples) {
  const auto l = conjugate(make_pwl({0}, {-1, 1}, 0));
  EXPECT_LE(semigroup_residual(abs_kernel(), parabola(), 2, 2, 1, feasible_grid(l, 2, 1, 10000)), 1e-6);
  EXPECT_LE(semigroup_residual(abs_kernel(), parabola(), 0, 1, 0.5, feasible_grid(l, 0, 0.5, 10000)), 1e-6);
  EXPECT_LE(semigroup_residual(abs_kernel(), parabola(), 1.3, 1, 0, feasible_grid(l, 1.3, 1, 10000)), 1e-6);
  EXPECT_THROW(semigroup_residual(abs_kernel(), parabola(), 0, 1, 1, feasible_grid(l, 0, 1, 10)), DomainError);
}

TEST(Discrete, ShockExamples) {
  const auto g = make_piecewise_constant({0}, {1, -1});
  auto r = discrete_exact_minimizer(dead_zone_l(), g, 0.5, 1);
  EXPECT_EQ(r.y_star, 1.5);
  EXPECT_EQ(r.q_min, -0.5);
  EXPECT_TRUE(r.multiple);
  EXPECT_EQ(discrete_w(dead_zone_l(), g, 0.5, 1), -1.0);

  r = discrete_exact_minimizer(dead_zone_l(), g, -0.5, 1);
  EXPECT_EQ(r.y_star, -0.5);
  EXPECT_EQ(r.q_min, -0.5);
  EXPECT_EQ(discrete_w(dead_zone_l(), g, -0.5, 1), 1.0);

  r = discrete_exact_minimizer(dead_zone_l(), g, 0, 1);
  EXPECT_EQ(r.y_star, 1.0);
  EXPECT_EQ(r.q_min, 0.0);
  EXPECT_TRUE(r.multiple);
}

TEST(Discrete, RarefactionStaysPut) {
  const auto g = make_piecewise_constant({0}, {-1, 1});
  EXPECT_EQ(discrete_w(dead_zone_l(), g, 0.5, 1), 1.0);
  EXPECT_EQ(discrete_w(dead_zone_l(), g, -0.5, 1), -1.0);
}

TEST(Discrete, VertexOfGUsesTransformSlope) {
  // H = |q| has one corner c = 0; data jumps between -1 and 1 (not matched),
  // so at the jump w takes the slope of L on its single segment.
  const auto l = conjugate(make_pwl({0}, {-1, 1}, 0));
  const auto g = make_piecewise_constant({0}, {-1, 1});
  const auto s = discrete_solve(l, g, 0.3, 1);
  EXPECT_EQ(s.kind, MinimizerKind::kVertexOfG);
  EXPECT_EQ(s.y_star, 0.0);
  EXPECT_EQ(s.w, 0.0);
}

TEST(Discrete, CoincidentIsFlagged) {
  const auto g = make_piecewise_constant({0}, {1, -1});
  // Vertex y = x - m t = 0 for x = -1, t = 1 (m = -1), on the jump.
  const auto s = discrete_solve(dead_zone_l(), g, 1, 1);
  if (s.kind == MinimizerKind::kCoincident) {
    EXPECT_TRUE(s.flagged);
  }
  const auto l = conjugate(make_pwl({0}, {-1, 1}, 0));
  const auto c = discrete_solve(l, make_piecewise_constant({0}, {-1, 1}), 1, 1);
  EXPECT_EQ(c.kind, MinimizerKind::kCoincident);
  EXPECT_TRUE(c.flagged);
}

TEST(Discrete, MatchesDenseGridOracle) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 12; ++trial) {
    const auto poly = oracle::random_flux(rng, 1 + trial % 3);
    const auto h = make_pwl(poly.breaks, poly.slopes, poly.anchor);
    const auto l = conjugate(h);
    std::uniform_real_distribution<double> u(-2, 2);
    std::vector<double> jumps;
    for (int k = 0; k < 1 + trial % 3; ++k) jumps.push_back(u(rng));
    std::sort(jumps.begin(), jumps.end());
    std::vector<double> values;
    for (std::size_t k = 0; k <= jumps.size(); ++k)
      values.push_back(poly.breaks[std::uniform_int_distribution<std::size_t>(0, poly.breaks.size() - 1)(rng)]);
    const auto g = make_piecewise_constant(jumps, values);
    const double x = u(rng);
    const double t = 0.5 + std::abs(u(rng));
    const auto r = discrete_exact_minimizer(l, g, x, t);
    const double lo = x - l.domain_hi() * t;
    const double hi = x - l.domain_lo() * t;
    constexpr long kN = 1'000'000;
    const auto [arg, best] = oracle::grid_min(
        [&](double y) { return t * l(std::clamp((x - y) / t, l.domain_lo(), l.domain_hi())).value() + g.g(y); },
        lo, hi, kN);
    // Q is Lipschitz with constant <= |c|max + |v|max.
    const double lip = l.lipschitz_constant() + g.lipschitz(lo, hi);
    EXPECT_LE(r.q_min, best + 1e-12);
    EXPECT_GE(r.q_min, best - lip * (hi - lo) / kN);
  }
}

TEST(SolveField, MonotoneAndFlags) {
  const auto g = make_piecewise_constant({0}, {1, -1});
  std::vector<double> xs;
  for (int i = 0; i <= 100; ++i) xs.push_back(-2 + 4.0 * i / 100);
  const auto f = solve_field(SharpKernel{dead_zone_l()}, g, xs, 1.0);
  for (std::size_t i = 1; i < xs.size(); ++i) EXPECT_LE(f.y_star[i - 1], f.y_star[i]);
  const auto shock = flag_shocks(f.x, f.y_star);
  EXPECT_TRUE(shock[50]);
  EXPECT_FALSE(shock[10]);
  EXPECT_FALSE(shock[90]);
}
