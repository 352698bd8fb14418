#include "kernsel/estimators.hpp"
#include "kernsel/simulation.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

using namespace kernsel;

namespace {

Sample
random_sample(std::size_t n, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = z(rng);
    y[i] = std::sin(2.0 * x[i]) + 0.3 * z(rng);
  }
  return Sample(x, y);
}

double
max_abs_diff(const Curve& a, const Curve& b)
{
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

double
phi(double u)
{
  return std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi);
}

} // namespace

TEST(Sample, Validation)
{
  EXPECT_THROW(Sample({}, {}), std::invalid_argument);
  EXPECT_THROW(Sample({ 1.0, 2.0 }, { 1.0 }), std::invalid_argument);
  EXPECT_THROW(Sample({ 1.0, NAN }, { 1.0, 2.0 }), std::invalid_argument);
  EXPECT_THROW(Sample({ 1.0 }, { INFINITY }), std::invalid_argument);
  Sample s({ 1.0, 2.0, 3.0 }, { 1.0, 2.0, 2.0 });
  EXPECT_DOUBLE_EQ(s.mean_y_sq(), 3.0);
  const auto t = s.without(1);
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t.x()[1], 3.0);
  EXPECT_THROW(s.with_y({ 1.0 }), std::invalid_argument);
}

TEST(DensityCurve, SingleObservationAtGridPoint)
{
  const auto k = GaussianMixtureKernel::order7();
  auto g = make_grid(-1.0, 1.0, 5); // contains 0.5
  Sample s({ 0.5 }, { 3.0 });
  EXPECT_NEAR(density_curve(s, k, Bandwidth(1.0), g)[3], k.eval(0.0), 1e-15);
  EXPECT_NEAR(density_curve(s, k, Bandwidth(0.25), g)[3], k.eval(0.0) / 0.25, 1e-14);
}

TEST(DensityCurve, MassNearOne)
{
  std::mt19937_64 rng(17);
  std::normal_distribution<double> z;
  std::vector<double> x(200), y(200, 0.0);
  for (auto& v : x)
    v = z(rng);
  Sample s(x, y);
  auto g = make_grid(-8.0, 8.0, 2001);
  const auto f = density_curve(s, GaussianMixtureKernel::order7(), Bandwidth(0.3), g);
  double mass = 0.0;
  for (double v : f.values())
    mass += v;
  EXPECT_NEAR(mass * g->step(), 1.0, 0.05);
}

TEST(DensityCurve, IgnoresResponsesAndOrder)
{
  const auto s = random_sample(40, 2);
  std::vector<double> y2(s.y().begin(), s.y().end());
  for (auto& v : y2)
    v *= 2.0;
  auto g = make_grid(-2.0, 2.0, 30);
  const auto k = GaussianMixtureKernel::order7();
  const auto a = density_curve(s, k, Bandwidth(0.2), g);
  EXPECT_EQ(max_abs_diff(a, density_curve(s.with_y(y2), k, Bandwidth(0.2), g)), 0.0);

  std::vector<double> xr(s.x().rbegin(), s.x().rend()), yr(s.y().rbegin(), s.y().rend());
  Sample rev(xr, yr);
  EXPECT_LT(max_abs_diff(a, density_curve(rev, k, Bandwidth(0.2), g)), 1e-13);
  EXPECT_LT(max_abs_diff(numerator_curve(s, k, Bandwidth(0.2), g),
                         numerator_curve(rev, k, Bandwidth(0.2), g)),
            1e-13);
}

TEST(NumeratorCurve, UnitAndZeroResponses)
{
  const auto s = random_sample(60, 4);
  auto g = make_grid(-2.0, 2.0, 40);
  const auto k = GaussianMixtureKernel::order7();
  const auto ones = s.with_y(std::vector<double>(60, 1.0));
  EXPECT_LT(max_abs_diff(numerator_curve(ones, k, Bandwidth(0.3), g),
                         density_curve(s, k, Bandwidth(0.3), g)),
            1e-13);
  const auto zero = numerator_curve(s.with_y(std::vector<double>(60, 0.0)), k,
                                    Bandwidth(0.3), g);
  for (double v : zero.values())
    EXPECT_EQ(v, 0.0);
}

TEST(NumeratorCurve, LinearInResponses)
{
  const auto s = random_sample(10, 5);
  std::vector<double> y2(10), ysum(10);
  for (std::size_t i = 0; i < 10; ++i) {
    y2[i] = std::cos(static_cast<double>(i));
    ysum[i] = s.y()[i] + y2[i];
  }
  auto g = make_grid(-2.0, 2.0, 25);
  const auto k = GaussianMixtureKernel::order7();
  const auto a = numerator_curve(s, k, Bandwidth(0.2), g);
  const auto b = numerator_curve(s.with_y(y2), k, Bandwidth(0.2), g);
  const auto c = numerator_curve(s.with_y(ysum), k, Bandwidth(0.2), g);
  for (std::size_t j = 0; j < g->size(); ++j)
    EXPECT_NEAR(a[j] + b[j], c[j], 1e-12);
}

TEST(NumeratorCurve, MatchesDirectSum)
{
  const auto s = random_sample(25, 6);
  auto g = make_grid(-1.5, 1.5, 11);
  const auto k = GaussianMixtureKernel::order7();
  const auto c = numerator_curve(s, k, Bandwidth(0.15), g);
  for (std::size_t j = 0; j < g->size(); ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
      sum += s.y()[i] * k.eval((s.x()[i] - (*g)[j]) / 0.15) / 0.15;
    EXPECT_NEAR(c[j], sum / 25.0, 1e-13);
  }
}

TEST(ConvolvedNumerator, SmallEtaApproachesPlainEstimate)
{
  const auto s = random_sample(50, 8);
  auto g = make_grid(-2.0, 2.0, 50);
  const auto k = GaussianMixtureKernel::order7();
  EXPECT_LT(max_abs_diff(convolved_numerator_curve(s, k, Bandwidth(0.3), Bandwidth(1e-4), g),
                         numerator_curve(s, k, Bandwidth(0.3), g)),
            1e-3);
}

TEST(ConvolvedNumerator, SymmetricInBandwidths)
{
  const auto s = random_sample(50, 9);
  auto g = make_grid(-2.0, 2.0, 50);
  const auto k = GaussianMixtureKernel::order7();
  const auto a = convolved_numerator_curve(s, k, Bandwidth(0.2), Bandwidth(0.55), g);
  const auto b = convolved_numerator_curve(s, k, Bandwidth(0.55), Bandwidth(0.2), g);
  for (std::size_t j = 0; j < g->size(); ++j)
    EXPECT_EQ(a[j], b[j]);
  const auto zero = convolved_numerator_curve(s.with_y(std::vector<double>(50, 0.0)), k,
                                              Bandwidth(0.2), Bandwidth(0.55), g);
  for (double v : zero.values())
    EXPECT_EQ(v, 0.0);
}

TEST(ConvolvedNumerator, MatchesDirectMixtureSum)
{
  const auto s = random_sample(20, 10);
  auto g = make_grid(-1.0, 1.0, 9);
  const auto k = GaussianMixtureKernel::order7();
  const auto conv = k.convolve(Bandwidth(0.25), Bandwidth(0.4));
  const auto c = convolved_numerator_curve(s, k, Bandwidth(0.25), Bandwidth(0.4), g);
  const auto d = convolved_density_curve(s, k, Bandwidth(0.25), Bandwidth(0.4), g);
  for (std::size_t j = 0; j < g->size(); ++j) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      num += s.y()[i] * conv.eval(s.x()[i] - (*g)[j]);
      den += conv.eval(s.x()[i] - (*g)[j]);
    }
    EXPECT_NEAR(c[j], num / 20.0, 1e-13);
    EXPECT_NEAR(d[j], den / 20.0, 1e-13);
  }
}

TEST(QuotientCurve, Basics)
{
  auto g = make_grid(0.0, 1.0, 4);
  Curve num(g, { 0.5, -1.0, 2.0, 3.0 });
  const auto one = quotient_curve(num, num);
  for (double v : one.values())
    EXPECT_EQ(v, 1.0);
  EXPECT_EQ(one.flag_count(), 0u);

  Curve den(g, { 1.0, 0.0, 4.0, 2.0 });
  const auto q = quotient_curve(num, den);
  EXPECT_EQ(q[0], 0.5);
  EXPECT_FALSE(std::isfinite(q[1]));
  EXPECT_TRUE(q.flagged(1));
  EXPECT_EQ(q[2], 0.5);
  EXPECT_EQ(q[3], 1.5);
  EXPECT_EQ(q.flag_count(), 1u);

  Curve den2(g, { 1.0, -0.01, 4.0, 0.05 });
  const auto c = quotient_curve(num, den2, 0.1);
  EXPECT_EQ(c[0], 0.5);
  EXPECT_DOUBLE_EQ(c[1], -1.0 / -0.1);
  EXPECT_DOUBLE_EQ(c[3], 3.0 / 0.1);
  EXPECT_TRUE(c.flagged(1));
  EXPECT_TRUE(c.flagged(3));
  EXPECT_EQ(c.flag_count(), 2u);

  Curve other(make_grid(0.0, 2.0, 4), { 1.0, 1.0, 1.0, 1.0 });
  EXPECT_THROW(quotient_curve(num, other), std::invalid_argument);
}

TEST(NwCurve, ConstantResponses)
{
  const auto s = random_sample(30, 11).with_y(std::vector<double>(30, 2.5));
  auto g = make_grid(-2.0, 2.0, 30);
  const auto c = nw_curve(s, GaussianMixtureKernel::gauss(), Bandwidth(0.3), g);
  for (double v : c.values())
    EXPECT_NEAR(v, 2.5, 1e-13);
}

TEST(NwCurve, AgreesWithEqualBandwidthQuotient)
{
  const auto s = random_sample(30, 12);
  auto g = make_grid(-2.0, 2.0, 40);
  for (const auto& k : { GaussianMixtureKernel::gauss(), GaussianMixtureKernel::order7() }) {
    const auto nw = nw_curve(s, k, Bandwidth(0.4), g);
    const auto q = quotient_curve(numerator_curve(s, k, Bandwidth(0.4), g),
                                  density_curve(s, k, Bandwidth(0.4), g));
    for (std::size_t j = 0; j < g->size(); ++j)
      if (!q.flagged(j))
        EXPECT_NEAR(nw[j], q[j], 1e-12);
  }
}

TEST(NwCurve, AffineEquivariance)
{
  const auto s = random_sample(15, 13);
  std::vector<double> y2;
  for (double v : s.y())
    y2.push_back(-1.7 * v + 0.4);
  auto g = make_grid(-1.5, 1.5, 20);
  const auto k = GaussianMixtureKernel::gauss();
  const auto a = nw_curve(s, k, Bandwidth(0.25), g);
  const auto b = nw_curve(s.with_y(y2), k, Bandwidth(0.25), g);
  for (std::size_t j = 0; j < g->size(); ++j)
    EXPECT_NEAR(b[j], -1.7 * a[j] + 0.4, 1e-12);
}

TEST(NwCurve, UnderflowFallsBackToNearestObservation)
{
  Sample s({ 0.0, 1.0 }, { 2.0, 5.0 });
  auto g = make_grid(0.3, 0.9, 2);
  const auto c = nw_curve(s, GaussianMixtureKernel::gauss(), Bandwidth(0.001), g);
  EXPECT_EQ(c[0], 2.0);
  EXPECT_EQ(c[1], 5.0);
  EXPECT_EQ(c.flag_count(), 0u);
}

TEST(LooNwPredict, SmallCases)
{
  const auto k = GaussianMixtureKernel::gauss();
  Sample two({ 0.0, 0.4 }, { 1.0, 7.0 });
  EXPECT_DOUBLE_EQ(*loo_nw_predict(two, k, Bandwidth(0.3), 0), 7.0);
  EXPECT_DOUBLE_EQ(*loo_nw_predict(two, k, Bandwidth(0.3), 1), 1.0);

  const auto c = random_sample(12, 14).with_y(std::vector<double>(12, -3.0));
  for (std::size_t i = 0; i < 12; ++i)
    EXPECT_NEAR(*loo_nw_predict(c, k, Bandwidth(0.2), i), -3.0, 1e-13);

  EXPECT_THROW(loo_nw_predict(Sample({ 0.0 }, { 1.0 }), k, Bandwidth(0.3), 0),
               std::invalid_argument);
  EXPECT_THROW(loo_nw_predict(two, k, Bandwidth(0.3), 2), std::out_of_range);
}

TEST(LooNwPredict, MatchesNaiveDeleteOne)
{
  const auto k = GaussianMixtureKernel::gauss();
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto s = random_sample(20, 100 + seed);
    for (double h : { 0.05, 0.2, 0.7 })
      for (std::size_t i = 0; i < s.size(); ++i) {
        double num = 0.0, den = 0.0;
        for (std::size_t j = 0; j < s.size(); ++j) {
          if (j == i)
            continue;
          const double w = phi((s.x()[j] - s.x()[i]) / h);
          num += w * s.y()[j];
          den += w;
        }
        EXPECT_NEAR(*loo_nw_predict(s, k, Bandwidth(h), i), num / den, 1e-12);
      }
  }
}

TEST(Families, MatchSingleBandwidthCurves)
{
  const auto s = random_sample(80, 15);
  auto g = make_grid(-2.0, 2.0, 30);
  const auto k = GaussianMixtureKernel::order7();
  const std::vector<double> hs{ 0.01, 0.05, 0.3, 1.0 };
  const auto fam = density_numerator_families(s, k, hs, g);
  ASSERT_EQ(fam.density.size(), hs.size());
  ASSERT_EQ(fam.numerator.size(), hs.size());
  for (std::size_t b = 0; b < hs.size(); ++b) {
    EXPECT_EQ(fam.density.bandwidths[b], hs[b]);
    EXPECT_LT(max_abs_diff(fam.density.curves[b], density_curve(s, k, Bandwidth(hs[b]), g)),
              1e-12);
    EXPECT_LT(
      max_abs_diff(fam.numerator.curves[b], numerator_curve(s, k, Bandwidth(hs[b]), g)),
      1e-12);
  }
}

// E numerator_curve = K_h * (b f): Monte Carlo average over independent samples.
TEST(NumeratorCurve, UnbiasedForSmoothedTarget)
{
  const ModelSpec model{ RegressionFn::b1, Distribution::std_normal, 0.1 };
  const auto k = GaussianMixtureKernel::order7();
  const Bandwidth h(0.3);
  auto g = make_grid(-2.0, 2.0, 25);
  const std::size_t reps = 2000, n = 100;
  std::vector<double> sum(g->size(), 0.0), sum_sq(g->size(), 0.0);
  for (std::size_t r = 0; r < reps; ++r) {
    const auto c =
      numerator_curve(generate_sample(model, n, replication_seed(99, r)), k, h, g);
    for (std::size_t j = 0; j < g->size(); ++j) {
      sum[j] += c[j];
      sum_sq[j] += c[j] * c[j];
    }
  }
  const auto truth = smoothed_numerator_truth(model, k, h, g);
  const double m = static_cast<double>(reps);
  for (std::size_t j = 0; j < g->size(); ++j) {
    const double mean = sum[j] / m;
    const double var = (sum_sq[j] - m * mean * mean) / (m - 1.0);
    const double se = std::sqrt(var / m);
    EXPECT_LE(std::abs(mean - truth[j]), 3.0 * se) << "x = " << (*g)[j];
  }
}
