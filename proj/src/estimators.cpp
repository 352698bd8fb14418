#include "kernsel/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace kernsel {

namespace {

constexpr double inv_sqrt_2pi = 0.3989422804014327;

// exp(-t) is exactly zero in double precision beyond this point.
constexpr double exp_underflow = 746.0;

struct SortedRows
{
  std::vector<double> x;
  std::vector<double> y;
};

SortedRows
sorted_rows(const Sample& s)
{
  std::vector<std::size_t> idx(s.size());
  std::iota(idx.begin(), idx.end(), std::size_t{ 0 });
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return s.x()[a] < s.x()[b]; });
  SortedRows r;
  r.x.reserve(s.size());
  r.y.reserve(s.size());
  for (auto i : idx) {
    r.x.push_back(s.x()[i]);
    r.y.push_back(s.y()[i]);
  }
  return r;
}

// Mixture in evaluation form: sum_j amp_j exp(rate_j d^2).
struct Terms
{
  std::vector<double> amp;
  std::vector<double> rate;
  double radius = 0.0;

  // Components are put in canonical order so that mixtures that are equal
  // as multisets evaluate bit-identically.
  explicit Terms(std::span<const MixtureComponent> unordered)
  {
    std::vector<MixtureComponent> comps(unordered.begin(), unordered.end());
    std::sort(comps.begin(), comps.end(), [](const auto& a, const auto& b) {
      return a.variance < b.variance ||
             (a.variance == b.variance && a.coefficient < b.coefficient);
    });
    double vmax = 0.0;
    for (const auto& c : comps) {
      amp.push_back(c.coefficient * inv_sqrt_2pi / std::sqrt(c.variance));
      rate.push_back(-0.5 / c.variance);
      vmax = std::max(vmax, c.variance);
    }
    radius = std::sqrt(2.0 * vmax * exp_underflow);
  }

  double operator()(double d) const noexcept
  {
    const double d2 = d * d;
    double s = 0.0;
    for (std::size_t j = 0; j < amp.size(); ++j)
      s += amp[j] * std::exp(rate[j] * d2);
    return s;
  }
};

struct Sums
{
  std::vector<double> plain;
  std::vector<double> weighted;
};

// For every grid point x: sum_i K(X_i - x) and sum_i Y_i K(X_i - x), where K
// is the given (already scaled) mixture. Rows farther than the underflow
// radius contribute exactly zero and are skipped.
Sums
kernel_sums(const SortedRows& rows, const Terms& terms, const Grid& grid)
{
  Sums out;
  out.plain.assign(grid.size(), 0.0);
  out.weighted.assign(grid.size(), 0.0);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double x = grid[k];
    auto first = std::lower_bound(rows.x.begin(), rows.x.end(), x - terms.radius);
    auto last = std::upper_bound(first, rows.x.end(), x + terms.radius);
    double p = 0.0;
    double w = 0.0;
    for (auto it = first; it != last; ++it) {
      const auto i = static_cast<std::size_t>(it - rows.x.begin());
      const double kv = terms(*it - x);
      p += kv;
      w += rows.y[i] * kv;
    }
    out.plain[k] = p;
    out.weighted[k] = w;
  }
  return out;
}

std::vector<double>
scaled_by(std::vector<double> v, double factor)
{
  for (auto& e : v)
    e *= factor;
  return v;
}

void
require_nonempty(const GridPtr& grid)
{
  if (!grid)
    throw std::invalid_argument("estimator needs an evaluation grid");
}

} // namespace

Sample::Sample(std::vector<double> x, std::vector<double> y)
  : x_(std::move(x))
  , y_(std::move(y))
{
  if (x_.size() != y_.size())
    throw std::invalid_argument("sample x and y lengths differ (" +
                                std::to_string(x_.size()) + " vs " +
                                std::to_string(y_.size()) + ")");
  if (x_.empty())
    throw std::invalid_argument("no observations");
  for (std::size_t i = 0; i < x_.size(); ++i)
    if (!std::isfinite(x_[i]) || !std::isfinite(y_[i]))
      throw std::invalid_argument("non-finite observation at row " +
                                  std::to_string(i + 1));
}

Sample
Sample::with_y(std::vector<double> y) const
{
  return Sample(x_, std::move(y));
}

Sample
Sample::without(std::size_t i) const
{
  if (i >= size())
    throw std::out_of_range("row index out of range");
  auto x = x_;
  auto y = y_;
  x.erase(x.begin() + static_cast<std::ptrdiff_t>(i));
  y.erase(y.begin() + static_cast<std::ptrdiff_t>(i));
  return Sample(std::move(x), std::move(y));
}

double
Sample::mean_y_sq() const noexcept
{
  double s = 0.0;
  for (double v : y_)
    s += v * v;
  return s / static_cast<double>(y_.size());
}

Curve
density_curve(const Sample& s, const GaussianMixtureKernel& k, Bandwidth h,
              const GridPtr& grid)
{
  require_nonempty(grid);
  const auto kh = k.scaled(h);
  auto sums = kernel_sums(sorted_rows(s), Terms(kh.components()), *grid);
  return Curve(grid, scaled_by(std::move(sums.plain), 1.0 / static_cast<double>(s.size())));
}

Curve
numerator_curve(const Sample& s, const GaussianMixtureKernel& k, Bandwidth h,
                const GridPtr& grid)
{
  require_nonempty(grid);
  const auto kh = k.scaled(h);
  auto sums = kernel_sums(sorted_rows(s), Terms(kh.components()), *grid);
  return Curve(grid,
               scaled_by(std::move(sums.weighted), 1.0 / static_cast<double>(s.size())));
}

Curve
convolved_numerator_curve(const Sample& s, const GaussianMixtureKernel& k,
                          Bandwidth h, Bandwidth eta, const GridPtr& grid)
{
  require_nonempty(grid);
  const auto conv = k.convolve(h, eta);
  auto sums = kernel_sums(sorted_rows(s), Terms(conv.components()), *grid);
  return Curve(grid,
               scaled_by(std::move(sums.weighted), 1.0 / static_cast<double>(s.size())));
}

Curve
convolved_density_curve(const Sample& s, const GaussianMixtureKernel& k,
                        Bandwidth h, Bandwidth eta, const GridPtr& grid)
{
  require_nonempty(grid);
  const auto conv = k.convolve(h, eta);
  auto sums = kernel_sums(sorted_rows(s), Terms(conv.components()), *grid);
  return Curve(grid, scaled_by(std::move(sums.plain), 1.0 / static_cast<double>(s.size())));
}

Curve
quotient_curve(const Curve& num, const Curve& den, std::optional<double> clip)
{
  require_same_grid(num, den, "quotient_curve");
  if (clip && !(*clip > 0.0))
    throw std::invalid_argument("quotient clip threshold must be positive");

  std::vector<double> values(num.size());
  std::vector<bool> flags(num.size(), false);
  for (std::size_t k = 0; k < num.size(); ++k) {
    const double d = den[k];
    if (clip && std::abs(d) < *clip) {
      values[k] = num[k] / (d < 0.0 ? -*clip : *clip);
      flags[k] = true;
      continue;
    }
    values[k] = num[k] / d;
    flags[k] = !std::isfinite(values[k]) || std::abs(d) < 1e-12;
  }
  return Curve(num.grid_ptr(), std::move(values), std::move(flags));
}

Curve
nw_curve(const Sample& s, const GaussianMixtureKernel& k, Bandwidth h,
         const GridPtr& grid)
{
  require_nonempty(grid);
  const auto rows = sorted_rows(s);
  const auto kh = k.scaled(h);
  const Terms terms(kh.components());
  auto sums = kernel_sums(rows, terms, *grid);

  std::vector<double> values(grid->size(), 0.0);
  std::vector<bool> flags(grid->size(), false);
  const bool single = kh.components().size() == 1;
  const double rate = single ? -0.5 / kh.components()[0].variance : 0.0;

  for (std::size_t g = 0; g < grid->size(); ++g) {
    double num = sums.weighted[g];
    double den = sums.plain[g];
    if (den == 0.0 && single) {
      // exp(rate (d^2 - d0^2)) with d0 the nearest distance; the common
      // factor cancels in the ratio.
      const double x = (*grid)[g];
      double d0sq = std::numeric_limits<double>::infinity();
      for (double xi : rows.x)
        d0sq = std::min(d0sq, (xi - x) * (xi - x));
      num = 0.0;
      den = 0.0;
      for (std::size_t i = 0; i < rows.x.size(); ++i) {
        const double d = rows.x[i] - x;
        const double w = std::exp(rate * (d * d - d0sq));
        num += w * rows.y[i];
        den += w;
      }
    }
    const double v = num / den;
    if (den == 0.0 || !std::isfinite(v)) {
      flags[g] = true;
      values[g] = 0.0;
    } else {
      values[g] = v;
    }
  }
  return Curve(grid, std::move(values), std::move(flags));
}

std::optional<double>
loo_nw_predict(const Sample& s, const GaussianMixtureKernel& k, Bandwidth h,
               std::size_t i)
{
  const auto n = s.size();
  if (n < 2)
    throw std::invalid_argument("leave-one-out prediction needs n >= 2");
  if (i >= n)
    throw std::out_of_range("leave-one-out index out of range");

  const auto x = s.x();
  const auto y = s.y();
  const double xi = x[i];
  double num = 0.0;
  double den = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (j == i)
      continue;
    const double w = k.eval((x[j] - xi) / h.value());
    num += w * y[j];
    den += w;
  }

  if (den == 0.0 && k.components().size() == 1) {
    const double rate = -0.5 / (k.components()[0].variance * h.value() * h.value());
    double d0sq = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i)
        d0sq = std::min(d0sq, (x[j] - xi) * (x[j] - xi));
    num = 0.0;
    den = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i)
        continue;
      const double d = x[j] - xi;
      const double w = std::exp(rate * (d * d - d0sq));
      num += w * y[j];
      den += w;
    }
  }

  if (den == 0.0)
    return std::nullopt;
  const double v = num / den;
  if (!std::isfinite(v))
    return std::nullopt;
  return v;
}

DensityNumeratorFamilies
density_numerator_families(const Sample& s, const GaussianMixtureKernel& k,
                           std::span<const double> bandwidths,
                           const GridPtr& grid)
{
  require_nonempty(grid);
  const auto rows = sorted_rows(s);
  const double inv_n = 1.0 / static_cast<double>(s.size());
  DensityNumeratorFamilies out;
  out.density.bandwidths.assign(bandwidths.begin(), bandwidths.end());
  out.numerator.bandwidths.assign(bandwidths.begin(), bandwidths.end());
  out.density.curves.reserve(bandwidths.size());
  out.numerator.curves.reserve(bandwidths.size());
  for (double hv : bandwidths) {
    const auto kh = k.scaled(Bandwidth(hv));
    auto sums = kernel_sums(rows, Terms(kh.components()), *grid);
    out.density.curves.emplace_back(grid, scaled_by(std::move(sums.plain), inv_n));
    out.numerator.curves.emplace_back(grid, scaled_by(std::move(sums.weighted), inv_n));
  }
  return out;
}

} // namespace kernsel
