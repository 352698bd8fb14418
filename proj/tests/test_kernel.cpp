#include "kernsel/kernel.hpp"

#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <thread>
#include <vector>

using namespace kernsel;

namespace {

const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);

// Integral over the real line, split at 0; the integrands decay like Gaussians.
template <class F>
double
integrate_line(F f)
{
  using Q = boost::math::quadrature::gauss_kronrod<double, 61>;
  double err = 0.0;
  return Q::integrate(f, -60.0, 0.0, 15, 1e-12, &err) +
         Q::integrate(f, 0.0, 60.0, 15, 1e-12, &err);
}

} // namespace

TEST(Bandwidth, RejectsNonPositiveAndNonFinite)
{
  EXPECT_THROW(Bandwidth{ 0.0 }, std::invalid_argument);
  EXPECT_THROW(Bandwidth{ -0.3 }, std::invalid_argument);
  EXPECT_THROW(Bandwidth{ std::nan("") }, std::invalid_argument);
  EXPECT_THROW(Bandwidth{ INFINITY }, std::invalid_argument);
  EXPECT_EQ(Bandwidth(0.25).value(), 0.25);
}

TEST(GaussianMixtureKernel, ValidatesComponents)
{
  EXPECT_THROW(GaussianMixtureKernel({}), std::invalid_argument);
  EXPECT_THROW(GaussianMixtureKernel({ { 1.0, 0.0 } }), std::invalid_argument);
  EXPECT_THROW(GaussianMixtureKernel({ { 1.0, -1.0 } }), std::invalid_argument);
  EXPECT_THROW(GaussianMixtureKernel({ { 0.5, 1.0 }, { 0.4, 2.0 } }),
               std::invalid_argument);
  EXPECT_NO_THROW(GaussianMixtureKernel({ { 2.0, 1.0 }, { -1.0, 2.0 } }));
}

TEST(GaussianMixtureKernel, PresetsAndParsing)
{
  const auto k = GaussianMixtureKernel::order7();
  ASSERT_EQ(k.components().size(), 4u);
  EXPECT_EQ(k.components()[0], (MixtureComponent{ 4.0, 1.0 }));
  EXPECT_EQ(k.components()[3], (MixtureComponent{ -1.0, 4.0 }));
  EXPECT_EQ(k.max_variance(), 4.0);

  EXPECT_EQ(GaussianMixtureKernel::preset("gauss"), GaussianMixtureKernel::gauss());
  EXPECT_EQ(GaussianMixtureKernel::parse("order7"), k);
  EXPECT_EQ(GaussianMixtureKernel::parse("4:1,-6:2,4:3,-1:4"), k);
  EXPECT_THROW(GaussianMixtureKernel::preset("epanechnikov"), std::invalid_argument);
  EXPECT_THROW(GaussianMixtureKernel::parse("1:x"), std::invalid_argument);
  EXPECT_THROW(GaussianMixtureKernel::parse("0.5:1"), std::invalid_argument);
}

TEST(GaussianMixtureKernel, EvalAtZero)
{
  const double expected =
    inv_sqrt_2pi * (4.0 - 6.0 / std::sqrt(2.0) + 4.0 / std::sqrt(3.0) - 0.5);
  EXPECT_NEAR(GaussianMixtureKernel::order7().eval(0.0), expected, 1e-15);
  // 30-digit evaluation of the same sum
  EXPECT_NEAR(GaussianMixtureKernel::order7().eval(0.0), 0.625046962685306790, 1e-15);
  EXPECT_NEAR(GaussianMixtureKernel::gauss().eval(0.0), 0.3989422804014327, 1e-15);
}

TEST(GaussianMixtureKernel, Symmetric)
{
  const auto k = GaussianMixtureKernel::order7();
  EXPECT_EQ(k.eval(1.3), k.eval(-1.3));
  for (double x : { 0.1, 0.7, 2.5, 9.0 })
    EXPECT_EQ(k.eval(x), k.eval(-x));
}

TEST(GaussianMixtureKernel, ScaledEval)
{
  const auto k = GaussianMixtureKernel::order7();
  EXPECT_DOUBLE_EQ(k.scaled_eval(Bandwidth(1.0), 0.0), k.eval(0.0));
  EXPECT_NEAR(GaussianMixtureKernel::gauss().scaled_eval(Bandwidth(2.0), 0.0),
              0.5 * inv_sqrt_2pi, 1e-15);
  for (double x : { -0.8, 0.05, 0.33 })
    EXPECT_NEAR(k.scaled_eval(Bandwidth(0.37), x), k.eval(x / 0.37) / 0.37, 1e-13);
  const auto ks = k.scaled(Bandwidth(0.37));
  EXPECT_NEAR(ks.eval(0.21), k.scaled_eval(Bandwidth(0.37), 0.21), 1e-13);
}

TEST(GaussianMixtureKernel, ScaledMassIsOne)
{
  const std::vector<GaussianMixtureKernel> kernels{
    GaussianMixtureKernel::order7(), GaussianMixtureKernel::gauss(),
    GaussianMixtureKernel({ { 2.0, 0.5 }, { -1.0, 1.5 } })
  };
  for (const auto& k : kernels)
    for (double h : { 0.01, 0.37, 1.0, 3.0 }) {
      const double mass =
        integrate_line([&](double x) { return k.scaled_eval(Bandwidth(h), x); });
      EXPECT_NEAR(mass, 1.0, 1e-8) << "h = " << h;
    }
}

TEST(GaussianMixtureKernel, InnerProductGaussClosedForm)
{
  const auto g = GaussianMixtureKernel::gauss();
  EXPECT_NEAR(g.pair_inner_product(Bandwidth(0.5), Bandwidth(0.5)),
              1.0 / std::sqrt(std::numbers::pi), 1e-15);
  // quadrature of the product of two N(0, 0.25) densities
  const double q = integrate_line([](double x) {
    const double d = std::exp(-x * x / 0.5) / std::sqrt(2.0 * std::numbers::pi * 0.25);
    return d * d;
  });
  EXPECT_NEAR(g.pair_inner_product(Bandwidth(0.5), Bandwidth(0.5)), q, 1e-12);
}

TEST(GaussianMixtureKernel, L2NormMatchesQuadrature)
{
  const auto k = GaussianMixtureKernel::order7();
  const double q = integrate_line([&](double x) { return k.eval(x) * k.eval(x); });
  EXPECT_NEAR(k.l2_norm_sq() / q - 1.0, 0.0, 1e-8);
  EXPECT_NEAR(k.pair_inner_product(Bandwidth(1.0), Bandwidth(1.0)) / q - 1.0, 0.0, 1e-8);
  // 30-digit quadrature value
  EXPECT_NEAR(k.l2_norm_sq(), 0.525695805289151214, 1e-14);
}

TEST(GaussianMixtureKernel, InnerProductSymmetryAndScaling)
{
  const auto k = GaussianMixtureKernel::order7();
  EXPECT_EQ(k.pair_inner_product(Bandwidth(0.1), Bandwidth(0.9)),
            k.pair_inner_product(Bandwidth(0.9), Bandwidth(0.1)));
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int i = 0; i < 20; ++i) {
    const double h1 = u(rng), h2 = u(rng), t = 0.2 + 3.0 * u(rng);
    const double a = k.pair_inner_product(Bandwidth(h1), Bandwidth(h2));
    const double b = k.pair_inner_product(Bandwidth(t * h1), Bandwidth(t * h2));
    EXPECT_NEAR(b * t / a, 1.0, 1e-12);
    EXPECT_GT(k.pair_inner_product(Bandwidth(h1), Bandwidth(h1)), 0.0);
  }
}

TEST(GaussianMixtureKernel, InnerProductMatchesQuadratureOnRandomPairs)
{
  const auto k = GaussianMixtureKernel::order7();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  using Q = boost::math::quadrature::gauss_kronrod<double, 61>;
  for (int i = 0; i < 20; ++i) {
    const double h1 = u(rng), h2 = u(rng);
    const double reach = 40.0 * std::max(h1, h2);
    auto f = [&](double x) {
      return k.scaled_eval(Bandwidth(h1), x) * k.scaled_eval(Bandwidth(h2), x);
    };
    double err = 0.0;
    const double q = 2.0 * Q::integrate(f, 0.0, reach, 15, 1e-12, &err);
    EXPECT_NEAR(k.pair_inner_product(Bandwidth(h1), Bandwidth(h2)) / q, 1.0, 1e-8)
      << "h1 = " << h1 << ", h2 = " << h2;
  }
}

TEST(GaussianMixtureKernel, Convolve)
{
  const auto g = GaussianMixtureKernel::gauss();
  EXPECT_EQ(g.convolve(Bandwidth(1.0), Bandwidth(1.0)),
            GaussianMixtureKernel({ { 1.0, 2.0 } }));

  const auto k = GaussianMixtureKernel::order7();
  const auto c = k.convolve(Bandwidth(0.3), Bandwidth(0.7));
  EXPECT_EQ(c.components().size(), 16u);
  double sum = 0.0;
  for (const auto& m : c.components())
    sum += m.coefficient;
  EXPECT_NEAR(sum, 1.0, 1e-12);

  // (K_eta * K_h)(0.4) with h = 0.2, eta = 0.5 against direct quadrature
  const auto c2 = k.convolve(Bandwidth(0.2), Bandwidth(0.5));
  const double x = 0.4;
  const double q = integrate_line([&](double t) {
    return k.scaled_eval(Bandwidth(0.5), t) * k.scaled_eval(Bandwidth(0.2), x - t);
  });
  EXPECT_NEAR(c2.eval(x), q, 1e-8);
  EXPECT_EQ(k.convolve(Bandwidth(0.2), Bandwidth(0.5)),
            k.convolve(Bandwidth(0.5), Bandwidth(0.2)));
}

TEST(GaussianMixtureKernel, Moments)
{
  const auto k = GaussianMixtureKernel::order7();
  EXPECT_NEAR(k.moment(0), 1.0, 1e-12);
  EXPECT_NEAR(k.moment(2), 0.0, 1e-12);
  for (unsigned j = 1; j <= 7; ++j)
    EXPECT_NEAR(k.moment(j), 0.0, 1e-10) << "k = " << j;
  // 105 (4 - 6*16 + 4*81 - 256)
  EXPECT_NEAR(k.moment(8), -2520.0, 1e-9);
  EXPECT_NEAR(GaussianMixtureKernel::gauss().moment(4), 3.0, 1e-15);
  // quadrature of the sixth moment of the Gaussian
  const double q = integrate_line([](double u) {
    return std::pow(u, 6) * std::exp(-0.5 * u * u) * inv_sqrt_2pi;
  });
  EXPECT_NEAR(GaussianMixtureKernel::gauss().moment(6), q, 1e-10);
}

TEST(GaussianMixtureKernel, L1Norm)
{
  EXPECT_NEAR(GaussianMixtureKernel::gauss().l1_norm(), 1.0, 1e-12);
  const auto k = GaussianMixtureKernel::order7();
  EXPECT_GE(k.l1_norm(), 1.0);

  // fine Riemann sum over [-40, 40]
  const std::size_t m = 800001;
  const double step = 80.0 / static_cast<double>(m - 1);
  double r = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    r += std::abs(k.eval(-40.0 + step * static_cast<double>(i)));
  r *= step;
  EXPECT_NEAR(k.l1_norm() / r, 1.0, 1e-6);
  // 40-digit value from root splitting (roots near 1.63, 3.47, 5.83) and quadrature
  EXPECT_NEAR(k.l1_norm(), 1.25252077162397146, 1e-11);
}

TEST(GaussianMixtureKernel, SupNorm)
{
  const auto k = GaussianMixtureKernel::order7();
  double best = 0.0;
  for (int i = -20000; i <= 20000; ++i)
    best = std::max(best, std::abs(k.eval(i * 1e-3)));
  EXPECT_GE(k.sup_norm(), best - 1e-15);
  EXPECT_NEAR(k.sup_norm(), best, 1e-6);
  EXPECT_NEAR(GaussianMixtureKernel::gauss().sup_norm(), inv_sqrt_2pi, 1e-12);
}

TEST(GaussianMixtureKernel, NormsAreSafeAcrossThreads)
{
  const auto k = GaussianMixtureKernel::order7();
  std::vector<double> l1(8);
  {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < l1.size(); ++i)
      pool.emplace_back([&, i] { l1[i] = k.l1_norm(); });
  }
  for (double v : l1)
    EXPECT_EQ(v, l1.front());
  const auto copy = k;
  EXPECT_EQ(copy.l1_norm(), l1.front());
}
