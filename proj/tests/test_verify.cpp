#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "polyflux/mollify.hpp"
#include "polyflux/verify.hpp"

using namespace polyflux;

namespace {

PwlConvex abs_flux() { return make_pwl({0}, {-1, 1}, 0); }
PwlConvex dead_zone() { return make_pwl({-1, 1}, {-1, 0, 1}, 0); }
InitialData parabola() {
  return ClosedFormC1([](double y) { return y * y; }, [](double y) { return 2 * y; }, -10, 10);
}

// Exact field for H = |q|, g = y^2.
double exact_w(double x, double t) {
  if (std::abs(x) <= t) return 0.0;
  return x > 0 ? 2 * (x - t) : 2 * (x + t);
}

}  // namespace

TEST(TestBump, ProfileAndDerivatives) {
  const TestBump b{0.5, 0.5, 0.4, 0.3};
  EXPECT_DOUBLE_EQ(b.value(0.5, 0.5), 1.0);
  EXPECT_EQ(b.value(0.9, 0.5), 0.0);
  EXPECT_EQ(b.value(0.5, 0.2), 0.0);
  for (double x : {0.3, 0.55, 0.8}) {
    const double e = 1e-6;
    EXPECT_NEAR(b.dx(x, 0.6), (b.value(x + e, 0.6) - b.value(x - e, 0.6)) / (2 * e), 1e-6);
    EXPECT_NEAR(b.dt(x, 0.6), (b.value(x, 0.6 + e) - b.value(x, 0.6 - e)) / (2 * e), 1e-6);
  }
}

TEST(WeakResidual, ConstantFieldCancels) {
  const TestBump b{0.0, 1.0, 0.5, 0.5};
  const double r = weak_residual([](double, double) { return 0.7; }, [](double q) { return std::abs(q); },
                                 [](double) { return 0.7; }, b, {-1, 1});
  EXPECT_LE(std::abs(r), 1e-12);
}

TEST(WeakResidual, ZeroTestFunctionGivesZero) {
  // A bump of zero height is represented by a support that misses t > 0 rows.
  const TestBump b{0.0, 1.0, 0.5, 0.5};
  const double r = weak_residual([](double, double) { return 0.0; }, [](double) { return 0.0; },
                                 [](double) { return 0.0; }, b, {-1, 1});
  EXPECT_EQ(r, 0.0);
}

TEST(WeakResidual, SmoothRegionSmall) {
  const TestBump b{0.5, 0.5, 0.4, 0.3};
  const auto h = abs_flux();
  const double r = weak_residual(exact_w, [&](double q) { return h(q); }, [](double y) { return 2 * y; },
                                 b, {-3, 3}, {128, 128});
  EXPECT_LE(std::abs(r), 1e-3);
}

TEST(WeakResidual, TraceTermEngaged) {
  // Support reaches t = 0: int g' phi(x, 0) dx must balance the interior.
  const TestBump b{1.5, 0.1, 0.4, 0.3};
  const auto h = abs_flux();
  const double r = weak_residual(exact_w, [&](double q) { return h(q); }, [](double y) { return 2 * y; },
                                 b, {-3, 3}, {256, 256});
  EXPECT_LE(std::abs(r), 1e-3);
}

TEST(WeakResidual, Rejections) {
  const TestBump b{0.0, 1.0, 2.0, 0.5};
  auto f = [](double, double) { return 0.0; };
  auto z = [](double) { return 0.0; };
  EXPECT_THROW(weak_residual(f, z, z, b, {-1, 1}), DomainError);
  EXPECT_THROW(weak_residual(f, z, z, TestBump{0, 1, 0.5, 0.5}, {-1, 1}, {8, 16}), DomainError);
}

TEST(SampledField, InterpolatesAndCaches) {
  int calls = 0;
  SampledField f({0.0, 1.0, 2.0}, [&](std::span<const double> x, double t) {
    ++calls;
    std::vector<double> w;
    for (double v : x) w.push_back(v * t);
    return w;
  });
  EXPECT_DOUBLE_EQ(f(0.5, 2.0), 1.0);
  EXPECT_DOUBLE_EQ(f(1.5, 2.0), 3.0);
  EXPECT_EQ(calls, 1);
  EXPECT_DOUBLE_EQ(f(5.0, 1.0), 2.0);
  EXPECT_EQ(calls, 2);
}

TEST(TotalVariation, MonotoneCompositionDoesNotIncrease) {
  const std::vector<double> v{0, 3, -1, 2, 2, 5, -4};
  EXPECT_EQ(total_variation(v), 3 + 4 + 3 + 0 + 3 + 9);
  // Any nondecreasing index map.
  const std::vector<std::size_t> map{0, 0, 1, 3, 3, 4, 6, 6};
  std::vector<double> composed;
  for (auto i : map) composed.push_back(v[i]);
  EXPECT_LE(total_variation(composed), total_variation(v));
  EXPECT_EQ(total_variation(std::vector<double>{2, 2, 2}), 0.0);
}

TEST(Checks, ShockField) {
  const InitialData g = make_piecewise_constant({0}, {1, -1});
  const auto xs = uniform_grid(-2, 2, 101);
  const auto f = solve_field(SharpKernel{conjugate(dead_zone())}, g, xs, 1.0);
  const auto tv = tv_bound_check(f, g);
  EXPECT_TRUE(tv.passed);
  EXPECT_EQ(tv.measured, 2.0);
  EXPECT_TRUE(monotonicity_check(f).passed);
  const double z[] = {0.04, 0.2};
  const auto e = entropy_constant(f, z);
  EXPECT_FALSE(e.asserted);
  EXPECT_EQ(e.measured, 0.0);
}

TEST(Checks, ConstantFieldEntropyZero) {
  SolutionField f;
  f.t = 1.0;
  f.x = uniform_grid(0, 1, 11);
  f.w.assign(11, 3.0);
  const double z[] = {0.1};
  EXPECT_EQ(entropy_constant(f, z).measured, 0.0);
  EXPECT_EQ(total_variation(f.w), 0.0);
}

TEST(Checks, MollifiedEntropyAsserted) {
  const auto m = build_mollified(abs_flux(), 0.1);
  const auto xs = uniform_grid(-3, 3, 121);
  const auto f = mollified_field(m, parabola(), xs, 1.0);
  const double z[] = {0.05, 0.25, 1.0};
  const auto e = entropy_constant(f, z, 1.0 / (2.0 * m.delta()));
  EXPECT_TRUE(e.asserted);
  EXPECT_TRUE(e.passed);
  EXPECT_GT(e.measured, 0.0);
}

TEST(Checks, MonotonicityDetectsCorruption) {
  SolutionField f;
  f.t = 1;
  f.x = {0, 1, 2, 3};
  f.y_star = {0, 1, 0.5, 2};
  EXPECT_FALSE(monotonicity_check(f).passed);
}

TEST(Checks, LipschitzBounds) {
  const auto l = conjugate(abs_flux());
  // Lip(g) on [-3, 3] is 6, so C = max{0, 6 * 1 - 0} = 6.
  EXPECT_EQ(lipschitz_time_constant(l, 6.0), 6.0);
  LipschitzProbe probe{{-1.5, 0.0, 0.5, 1.2}, {0.01, 0.1, -0.2}, {{1.0, 0.5}, {1.5, 1.0}}};
  const auto rep = lipschitz_bounds_check(l, parabola(), probe);
  ASSERT_EQ(rep.size(), 3u);
  for (const auto& r : rep) EXPECT_TRUE(r.passed) << r.name << " " << r.measured;
  const InitialData zero = ClosedFormC1([](double) { return 0.0; }, [](double) { return 0.0; }, -9, 9);
  for (const auto& r : lipschitz_bounds_check(l, zero, probe)) EXPECT_TRUE(r.passed);
}

TEST(Checks, HjResidual) {
  const Kernel k{SharpKernel{conjugate(abs_flux())}};
  const std::pair<double, double> pts[] = {{2.0, 1.0}, {0.0, 1.0}};
  for (const auto& r : hj_residual(k, parabola(), abs_flux(), pts, 1e-3)) {
    EXPECT_FALSE(r.skipped);
    EXPECT_LE(r.residual, 1e-8);
  }
  const auto rec = hj_refinement_check(k, parabola(), abs_flux(), pts, 1e-2);
  EXPECT_TRUE(rec.passed);
}

TEST(Checks, HjResidualMollified) {
  const auto m = build_mollified(abs_flux(), 0.05);
  const Kernel k{smooth_kernel(m)};
  const std::pair<double, double> pts[] = {{2.0, 1.0}, {0.3, 1.0}};
  for (const auto& r : hj_residual(k, parabola(), abs_flux(), pts, 1e-3)) EXPECT_LE(r.residual, 10 * (1e-3 + 0.05));
}

TEST(Checks, HjSkipsShock) {
  const InitialData g = make_piecewise_constant({0}, {1, -1});
  const Kernel k{SharpKernel{conjugate(dead_zone())}};
  const std::pair<double, double> pts[] = {{0.0, 1.0}, {1.0, 1.0}};
  const auto r = hj_residual(k, g, dead_zone(), pts, 1e-3);
  EXPECT_TRUE(r[0].skipped);
  EXPECT_FALSE(r[1].skipped);
  EXPECT_LE(r[1].residual, 1e-9);
}
