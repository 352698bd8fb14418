#include "kernsel/kernel.hpp"

#include <algorithm>
#include <utility>
#include <charconv>
#include <cmath>
#include <mutex>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

namespace kernsel {

namespace {

constexpr double inv_sqrt_2pi = 0.3989422804014327;

// Number of scan cells used to bracket sign changes and local maxima.
constexpr std::size_t max_scan_cells = 200000;

// Gaussian tail mass P(Z > x / sqrt(v)).
double upper_tail(double x, double variance)
{
  return 0.5 * std::erfc(x / std::sqrt(2.0 * variance));
}

double double_factorial_odd(unsigned k)
{
  // (k-1)!! for even k
  double r = 1.0;
  for (unsigned j = 1; j < k; j += 2)
    r *= j;
  return r;
}

} // namespace

Bandwidth::Bandwidth(double value)
  : value_(value)
{
  if (!(value > 0.0) || !std::isfinite(value))
    throw std::invalid_argument("bandwidth must be positive and finite, got " +
                                std::to_string(value));
}

double
gaussian_density(double x, double variance) noexcept
{
  return inv_sqrt_2pi / std::sqrt(variance) *
         std::exp(-0.5 * x * x / variance);
}

struct GaussianMixtureKernel::NormCache
{
  std::once_flag l1_once;
  std::once_flag sup_once;
  double l1 = 0.0;
  double sup = 0.0;
};

GaussianMixtureKernel::GaussianMixtureKernel(
  std::vector<MixtureComponent> components)
  : components_(std::move(components))
  , cache_(std::make_shared<NormCache>())
{
  if (components_.empty())
    throw std::invalid_argument("kernel needs at least one component");
  double total = 0.0;
  for (const auto& c : components_) {
    if (!(c.variance > 0.0) || !std::isfinite(c.variance))
      throw std::invalid_argument("kernel component variance must be positive");
    if (!std::isfinite(c.coefficient))
      throw std::invalid_argument("kernel coefficient must be finite");
    total += c.coefficient;
    max_variance_ = std::max(max_variance_, c.variance);
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw std::invalid_argument("kernel coefficients must sum to 1, got " +
                                std::to_string(total));
}

GaussianMixtureKernel
GaussianMixtureKernel::order7()
{
  return GaussianMixtureKernel(
    { { 4.0, 1.0 }, { -6.0, 2.0 }, { 4.0, 3.0 }, { -1.0, 4.0 } });
}

GaussianMixtureKernel
GaussianMixtureKernel::gauss()
{
  return GaussianMixtureKernel({ { 1.0, 1.0 } });
}

GaussianMixtureKernel
GaussianMixtureKernel::preset(const std::string& name)
{
  if (name == "order7")
    return order7();
  if (name == "gauss")
    return gauss();
  throw std::invalid_argument("unknown kernel preset '" + name +
                              "' (expected order7 or gauss)");
}

GaussianMixtureKernel
GaussianMixtureKernel::parse(const std::string& text)
{
  if (text.find(':') == std::string::npos)
    return preset(text);

  auto to_double = [&](std::string_view tok) {
    while (!tok.empty() && tok.front() == ' ')
      tok.remove_prefix(1);
    while (!tok.empty() && tok.back() == ' ')
      tok.remove_suffix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
      throw std::invalid_argument("bad kernel component '" + std::string(tok) +
                                  "' in '" + text + "'");
    return v;
  };

  std::vector<MixtureComponent> comps;
  std::string_view rest(text);
  while (!rest.empty()) {
    auto comma = rest.find(',');
    auto item = rest.substr(0, comma);
    auto colon = item.find(':');
    if (colon == std::string_view::npos)
      throw std::invalid_argument("kernel component must be coefficient:variance, got '" +
                                  std::string(item) + "'");
    comps.push_back({ to_double(item.substr(0, colon)),
                      to_double(item.substr(colon + 1)) });
    if (comma == std::string_view::npos)
      break;
    rest.remove_prefix(comma + 1);
  }
  return GaussianMixtureKernel(std::move(comps));
}

double
GaussianMixtureKernel::eval(double x) const noexcept
{
  double s = 0.0;
  for (const auto& c : components_)
    s += c.coefficient * gaussian_density(x, c.variance);
  return s;
}

double
GaussianMixtureKernel::scaled_eval(Bandwidth h, double x) const noexcept
{
  return eval(x / h.value()) / h.value();
}

GaussianMixtureKernel
GaussianMixtureKernel::scaled(Bandwidth h) const
{
  auto comps = components_;
  const double h2 = h.value() * h.value();
  for (auto& c : comps)
    c.variance *= h2;
  return GaussianMixtureKernel(std::move(comps));
}

double
GaussianMixtureKernel::pair_inner_product(Bandwidth h1,
                                          Bandwidth h2) const noexcept
{
  // fixed argument order keeps the result bitwise symmetric
  if (h2.value() < h1.value())
    std::swap(h1, h2);
  const double a = h1.value() * h1.value();
  const double b = h2.value() * h2.value();
  double s = 0.0;
  for (const auto& ci : components_)
    for (const auto& cj : components_)
      s += ci.coefficient * cj.coefficient /
           std::sqrt(ci.variance * a + cj.variance * b);
  return inv_sqrt_2pi * s;
}

double
GaussianMixtureKernel::l2_norm_sq() const noexcept
{
  return pair_inner_product(Bandwidth(1.0), Bandwidth(1.0));
}

GaussianMixtureKernel
GaussianMixtureKernel::convolve(Bandwidth h, Bandwidth eta) const
{
  if (eta.value() < h.value())
    std::swap(h, eta);
  const double h2 = h.value() * h.value();
  const double e2 = eta.value() * eta.value();
  std::vector<MixtureComponent> comps;
  comps.reserve(components_.size() * components_.size());
  for (const auto& ci : components_)
    for (const auto& cj : components_)
      comps.push_back(
        { ci.coefficient * cj.coefficient, ci.variance * e2 + cj.variance * h2 });
  return GaussianMixtureKernel(std::move(comps));
}

double
GaussianMixtureKernel::moment(unsigned k) const noexcept
{
  if (k % 2 == 1)
    return 0.0;
  const double df = double_factorial_odd(k);
  double s = 0.0;
  for (const auto& c : components_)
    s += c.coefficient * std::pow(c.variance, k / 2) * df;
  return s;
}

// K is symmetric, so both norms are computed on [0, inf) and doubled where
// needed. Between consecutive sign changes, int |K| = |int K|, and int K over
// an interval is closed form through the Gaussian tail function. The only
// numerical step is locating the roots.
double
GaussianMixtureKernel::l1_norm() const
{
  std::call_once(cache_->l1_once, [this] {
    double min_variance = max_variance_;
    for (const auto& c : components_)
      min_variance = std::min(min_variance, c.variance);

    const double upper = 40.0 * std::sqrt(max_variance_);
    const double fine = std::sqrt(min_variance) / 50.0;
    const auto cells = static_cast<std::size_t>(
      std::clamp(std::ceil(upper / fine), 1000.0,
                 static_cast<double>(max_scan_cells)));
    const double step = upper / static_cast<double>(cells);

    std::vector<double> breaks{ 0.0 };
    double prev = eval(0.0);
    double prev_x = 0.0;
    for (std::size_t k = 1; k <= cells; ++k) {
      const double x = step * static_cast<double>(k);
      const double cur = eval(x);
      if ((prev < 0.0 && cur > 0.0) || (prev > 0.0 && cur < 0.0)) {
        boost::math::tools::eps_tolerance<double> tol(52);
        std::uintmax_t iters = 200;
        auto root = boost::math::tools::toms748_solve(
          [this](double t) { return eval(t); }, prev_x, x, prev, cur, tol,
          iters);
        breaks.push_back(0.5 * (root.first + root.second));
      }
      if (cur != 0.0) {
        prev = cur;
        prev_x = x;
      }
    }

    // tail mass of [a, inf)
    auto tail = [this](double a) {
      double s = 0.0;
      for (const auto& c : components_)
        s += c.coefficient * upper_tail(a, c.variance);
      return s;
    };

    double half = 0.0;
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k)
      half += std::abs(tail(breaks[k]) - tail(breaks[k + 1]));
    half += std::abs(tail(breaks.back()));
    cache_->l1 = 2.0 * half;
  });
  return cache_->l1;
}

double
GaussianMixtureKernel::sup_norm() const
{
  std::call_once(cache_->sup_once, [this] {
    const double upper = 10.0 * std::sqrt(max_variance_);
    const std::size_t cells = 20000;
    const double step = upper / static_cast<double>(cells);
    std::size_t best = 0;
    double best_val = std::abs(eval(0.0));
    for (std::size_t k = 1; k <= cells; ++k) {
      const double v = std::abs(eval(step * static_cast<double>(k)));
      if (v > best_val) {
        best_val = v;
        best = k;
      }
    }
    const double lo = step * static_cast<double>(best == 0 ? 0 : best - 1);
    const double hi = step * static_cast<double>(std::min(best + 1, cells));
    auto refined = boost::math::tools::brent_find_minima(
      [this](double t) { return -std::abs(eval(t)); }, lo, hi, 52);
    cache_->sup = std::max(best_val, -refined.second);
  });
  return cache_->sup;
}

} // namespace kernsel
