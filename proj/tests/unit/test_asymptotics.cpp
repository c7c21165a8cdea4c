#include <gtest/gtest.h>

#include <cmath>

#include "bcsgap/asymptotics.hpp"
#include "bcsgap/tc_finder.hpp"
#include "oracles.hpp"

using namespace bcsgap;

namespace {

MaterialSpec constant_material(double u = 0.3, double eps = 0.001, double b = 1.0) {
  return MaterialSpec{eps, b, 1.0, PotentialKernel::constant(u, Band{eps, b})};
}

SolverOptions tight(double tol) {
  SolverOptions o;
  o.tol = tol;
  return o;
}

GapSolution constant_profile(const EnergyGrid& g, double d) {
  GapSolution s;
  s.values.assign(g.size(), d);
  s.converged = true;
  return s;
}

Pchip flat(double lo, double hi, double d) {
  std::vector<double> x;
  for (int i = 0; i <= 64; ++i) x.push_back(lo + (hi - lo) * i / 64.0);
  x.back() = hi;
  return Pchip(x, std::vector<double>(x.size(), d));
}

// Antiderivative of {sqrt(eta^2 + a^2) - eta}^2 / sqrt(eta^2 + a^2).
double hc_antiderivative(double eta, double a) {
  return eta * std::hypot(eta, a) - eta * eta;
}

}  // namespace

TEST(LowT, EntropyBoundedByMaximumOfIntegrand) {
  const auto m = constant_material();
  const EnergyGrid g = build_grid(0.001, 1.0, 16, 20);
  const auto u0 = solve_gap_zero_T(m.kernel, g, 1e-14, 10000);
  const double d = u0.values[0];
  const double t = 0.02 * d;
  const double bound = std::exp(-40.0) * (4.0 / t) * 1.0 * 2.0 * d;
  EXPECT_LT(entropy_lowT(m, g, u0, t), bound);
  EXPECT_GT(cv_lowT(m, g, u0, t), 0.0);
}

TEST(LowT, SpecificHeatToEntropyRatio) {
  const auto m = constant_material();
  const EnergyGrid g = build_grid(0.001, 1.0, 16, 20);
  const auto u0 = solve_gap_zero_T(m.kernel, g, 1e-14, 10000);
  const double d = u0.values[0];
  const double t = 0.02 * d;
  const double r = cv_lowT(m, g, u0, t) / entropy_lowT(m, g, u0, t) * t / d;
  EXPECT_GE(r, 0.9);
  EXPECT_LE(r, 1.1);
}

TEST(LowT, MatchesLaplaceClosedFormsWithQuadratureOracle) {
  // Independent check of the integral forms: adaptive quadrature of the same
  // integrands with a constant gap.
  const double d = 0.07;
  const double t = 0.05 * d;
  const auto m = constant_material();
  const EnergyGrid g = build_grid(0.001, 1.0, 16, 20);
  const GapSolution u0 = constant_profile(g, d);
  auto es = [=](double x) {
    const double e = std::hypot(x, d);
    return e * std::exp(-e / t);
  };
  const double s_ref = 4.0 / t * oracle::integrate_split(es, {0.001, 0.05, 1.0});
  EXPECT_NEAR(entropy_lowT(m, g, u0, t), s_ref, 1e-9 * s_ref);
  EXPECT_NEAR(entropy_lowT(m, g, u0, t) / entropy_lowT_closed(1.0, d, t), 1.0, 0.05);
  EXPECT_NEAR(cv_lowT(m, g, u0, t) / cv_lowT_closed(1.0, d, t), 1.0, 0.05);
  const auto gap = gap_lowT(m.kernel, g, u0, t);
  const double corr = d - gap_lowT_closed(0.3, d, t);
  EXPECT_NEAR((d - gap[0]) / corr, 1.0, 0.05);
}

TEST(LowT, GapCorrectionSuppressedAtVeryLowT) {
  const auto m = constant_material();
  const EnergyGrid g = build_grid(0.001, 1.0, 16, 20);
  const auto u0 = solve_gap_zero_T(m.kernel, g, 1e-14, 10000);
  const double d = u0.values[0];
  const auto gap = gap_lowT(m.kernel, g, u0, 0.01 * d);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_LT(u0.values[i] - gap[i], 1e-15 * d);
}

TEST(LowT, RequiresTheZeroTemperatureSolution) {
  const auto m = constant_material();
  const EnergyGrid g = build_grid(0.001, 1.0, 4, 10);
  GapSolution s = constant_profile(g, 0.07);
  s.temperature = 0.01;
  EXPECT_THROW(entropy_lowT(m, g, s, 0.01), ParameterError);
  s.temperature = 0.0;
  EXPECT_THROW(cv_lowT(m, g, s, 0.0), ParameterError);
}

TEST(CriticalField, HalfLineAntiderivative) {
  for (double a : {0.5, 1.0, 2.0}) EXPECT_NEAR(hc_numerator_half_line(a), 0.5 * a * a, 1e-9);
}

TEST(CriticalField, ZeroGapGivesZero) {
  const auto m = constant_material();
  const EnergyGrid g = build_grid(0.001, 1.0, 8, 10);
  EXPECT_EQ(hc0_squared(m, g, constant_profile(g, 0.0), 0.04), 0.0);
}

TEST(CriticalField, ConstantGapFiniteLimits) {
  // b / (2 Tc) = 12 and eps = 1e-3 b. The finite-limit integral is checked
  // against the closed-form antiderivative and against adaptive quadrature;
  // its distance from the half-line value 4 pi N0 D^2 is dominated by the
  // missing slice [0, eps / 2Tc], about 2 (eps / 2Tc) / a.
  const double tc = 1.0 / 24.0;
  const double d = kGapToTcRatio * tc;
  const double a = d / (2 * tc);
  const double lo = 1e-3 / (2 * tc);
  const auto m = constant_material(0.3, 1e-3, 1.0);
  const double hc = hc0_squared(m, flat(1e-3, 1.0, d), tc);
  const double exact =
      32.0 * oracle::pi * tc * tc * (hc_antiderivative(12.0, a) - hc_antiderivative(lo, a));
  EXPECT_NEAR(hc, exact, 1e-10 * exact);
  auto f = [a](double eta) {
    const double r = std::hypot(eta, a);
    return (r - eta) * (r - eta) / r;
  };
  const double ref = 32.0 * oracle::pi * tc * tc * oracle::integrate_split(f, {lo, 1.0, 12.0});
  EXPECT_NEAR(hc, ref, 1e-9 * ref);
  const double half_line = 4.0 * oracle::pi * d * d;
  EXPECT_NEAR(1.0 - hc / half_line, 2.0 * lo / a, 0.2 * 2.0 * lo / a);
}

TEST(CriticalField, NystromEndpointsReproduceSolvedProfile) {
  const auto m = constant_material();
  const EnergyGrid g = build_grid(0.001, 1.0, 16, 20);
  const auto u0 = solve_gap_zero_T(m.kernel, g, 1e-14, 10000);
  const Pchip p = zero_T_profile(m.kernel, g, u0);
  EXPECT_NEAR(p(0.001), u0.values[0], 1e-13);
  EXPECT_NEAR(p(1.0), u0.values[0], 1e-13);
}

TEST(NormalSpecificHeat, HalfLineLimitAndScaling) {
  EXPECT_NEAR(cvn_integral(0.0, 400.0), oracle::pi * oracle::pi / 12.0, 1e-12);
  const double full = oracle::pi * oracle::pi / 12.0;
  EXPECT_NEAR(cvn_integral(5e-3, 25.0) / full, 1.0, 5e-3);
  const double tc = 0.02;
  const auto m1 = constant_material(0.3, 2 * tc * 5e-3, 2 * tc * 25.0);
  const auto m2 = constant_material(0.3, 4 * tc * 5e-3, 4 * tc * 25.0);
  EXPECT_NEAR(cvn_tc(m2, 2 * tc) / cvn_tc(m1, tc), 2.0, 1e-12);
  EXPECT_NEAR(cvn_tc(m1, tc), 8.0 * tc * cvn_integral(5e-3, 25.0), 1e-15);
}

TEST(Ratio, UniversalConstantValue) {
  EXPECT_NEAR(kUniversalRatio, 6.0 * oracle::pi * std::exp(-2.0 * oracle::egamma), 1e-15);
  EXPECT_NEAR(kUniversalRatio, 5.94207, 1e-5);
  EXPECT_NEAR(kGapToTcRatio, 1.76387, 1e-5);
}

TEST(Ratio, ScalesQuadraticallyWithGapInTheHalfLineLimit) {
  const double tc = 1e-3;
  const auto m = constant_material(0.3, 1e-7, 1.0);
  const double d = 1.7 * tc;
  const auto r1 = universal_ratio(m, flat(1e-7, 1.0, d), tc);
  const auto r2 = universal_ratio(m, flat(1e-7, 1.0, 1.5 * d), tc);
  EXPECT_NEAR(r2.ratio / r1.ratio, 2.25, 2.25 * 1e-3);
  EXPECT_EQ(r1.denominator, "C_V^N(T_c)");
}

TEST(Ratio, SeparableKernelStableUnderGridDoubling) {
  const Band band{0.001, 1.0};
  const MaterialSpec m{0.001, 1.0, 1.0, PotentialKernel::separable({0.5, 0.125}, band)};
  double prev = 0.0;
  for (std::size_t panels : {16u, 32u}) {
    const EnergyGrid g = build_grid(0.001, 1.0, panels, 20);
    const auto u0 = solve_gap_zero_T(m.kernel, g, 1e-14, 100000);
    const double tc = find_tc(m.kernel, g, 1e-12).tc;
    const auto r = universal_ratio(m, g, u0, tc);
    EXPECT_GT(r.ratio, 0.0);
    EXPECT_TRUE(std::isfinite(r.ratio));
    if (prev > 0.0) {
      EXPECT_NEAR(r.ratio, prev, 1e-6 * prev);
    }
    prev = r.ratio;
  }
}

TEST(Ratio, DeviationShrinksWithCutoff) {
  double prev = std::numeric_limits<double>::infinity();
  for (double rel : {1e-2, 1e-3, 1e-4}) {
    const double tc = 0.5 / 40.0;
    const double eps = rel * 2.0 * tc;
    const auto m = constant_material(0.3, eps, 1.0);
    const auto r = universal_ratio(m, flat(eps, 1.0, kGapToTcRatio * tc), tc);
    EXPECT_LT(r.deviation, prev) << rel;
    prev = r.deviation;
  }
}

TEST(ApproximationA, ResidualsSmallAtLowT) {
  const auto m = constant_material();
  const EnergyGrid g = build_grid(0.001, 1.0, 16, 20);
  GapSweep sw(m.kernel, g, tight(1e-15));
  const auto& u0 = sw.at(0.0);
  const double d = u0.values[0];
  const auto r = approximation_residuals(sw, u0, 0.03 * d);
  EXPECT_LT(r.du2, 1e-8);
  const double y = std::hypot(0.001, d) / (0.03 * d);
  for (int n = 0; n < 3; ++n) {
    EXPECT_NEAR(r.cosh_terms[n], std::pow(y, n) / std::cosh(y), 1e-12 * r.cosh_terms[n]);
    EXPECT_LT(r.cosh_terms[n], 1e-8);
  }
  EXPECT_LT(r.gap_shift, 1e-8);
  EXPECT_GT(approximation_residuals(sw, u0, 0.3 * d).max(), 1e-6);
}

TEST(ApproximationA, MeasuredT0) {
  const auto m = constant_material();
  const EnergyGrid g = build_grid(0.001, 1.0, 16, 20);
  GapSweep sw(m.kernel, g, tight(1e-15));
  const GapSolution u0 = sw.at(0.0);
  const T0Result t0 = measure_t0(sw, u0);
  EXPECT_LT(t0.residuals.max(), 1e-6);
  EXPECT_GT(t0.t0, 0.0);
  EXPECT_GT(t0.first_failure, t0.t0);
  EXPECT_LT((t0.first_failure - t0.t0) / t0.t0, 1e-6);
  EXPECT_GE(approximation_residuals(sw, u0, t0.first_failure).max(), 1e-6);
}

TEST(Report, EmptyListAndAggregation) {
  const auto m = constant_material();
  const EnergyGrid g = build_grid(0.001, 1.0, 16, 20);
  GapSweep sw(m.kernel, g, tight(1e-15));
  const GapSolution u0 = sw.at(0.0);
  EXPECT_TRUE(build_report(m, sw, u0, {}).empty());
  const double t = 0.1 * u0.values[0];
  const auto rep = build_report(m, sw, u0, {t});
  ASSERT_EQ(rep.size(), 1u);
  EXPECT_EQ(rep[0].gap_lowT, gap_lowT(m.kernel, g, u0, t));
  EXPECT_EQ(rep[0].gap_full, sw.at(t).values);
  EXPECT_EQ(rep[0].s_lowT, entropy_lowT(m, g, u0, t));
}
