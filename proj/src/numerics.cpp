#include "kernsel/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/normal.hpp>

namespace kernsel {

Grid::Grid(double lo, double hi, std::size_t m)
{
  if (m < 2)
    throw std::invalid_argument("grid needs at least 2 points");
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi))
    throw std::invalid_argument("degenerate grid interval [" +
                                std::to_string(lo) + ", " + std::to_string(hi) +
                                "]");
  step_ = (hi - lo) / static_cast<double>(m - 1);
  points_.resize(m);
  for (std::size_t k = 0; k < m; ++k)
    points_[k] = lo + step_ * static_cast<double>(k);
  points_.back() = hi;
}

Grid
Grid::from_points(std::vector<double> points)
{
  if (points.size() < 2)
    throw std::invalid_argument("grid needs at least 2 points");
  const double step = (points.back() - points.front()) /
                      static_cast<double>(points.size() - 1);
  if (!(step > 0.0))
    throw std::invalid_argument("grid points must be strictly increasing");
  for (std::size_t k = 1; k < points.size(); ++k) {
    const double d = points[k] - points[k - 1];
    if (!(d > 0.0))
      throw std::invalid_argument("grid points must be strictly increasing");
    if (std::abs(d - step) > 1e-9 * step)
      throw std::invalid_argument("grid points are not equispaced near x = " +
                                  std::to_string(points[k]));
  }
  Grid g;
  g.points_ = std::move(points);
  g.step_ = step;
  return g;
}

bool
Grid::same_as(const Grid& other) const noexcept
{
  return points_ == other.points_;
}

Curve::Curve(GridPtr grid, std::vector<double> values)
  : Curve(std::move(grid), std::move(values), {})
{}

Curve::Curve(GridPtr grid, std::vector<double> values, std::vector<bool> flags)
  : grid_(std::move(grid))
  , values_(std::move(values))
  , flags_(std::move(flags))
{
  if (!grid_)
    throw std::invalid_argument("curve needs a grid");
  if (values_.size() != grid_->size())
    throw std::invalid_argument("curve has " + std::to_string(values_.size()) +
                                " values for a grid of " +
                                std::to_string(grid_->size()) + " points");
  if (flags_.empty())
    flags_.assign(values_.size(), false);
  if (flags_.size() != values_.size())
    throw std::invalid_argument("curve flag count does not match its values");
}

Curve
Curve::zeros(GridPtr grid)
{
  const auto m = grid->size();
  return Curve(std::move(grid), std::vector<double>(m, 0.0));
}

std::size_t
Curve::flag_count() const noexcept
{
  return static_cast<std::size_t>(std::count(flags_.begin(), flags_.end(), true));
}

void
require_same_grid(const Curve& a, const Curve& b, const char* context)
{
  if (!a.shares_grid(b))
    throw std::invalid_argument(std::string(context) +
                                ": curves are defined on different grids");
}

void
QuantileSpec::validate() const
{
  if (!(0.0 <= p_lo && p_lo < p_hi && p_hi <= 1.0))
    throw std::invalid_argument("quantile levels must satisfy 0 <= lo < hi <= 1");
  if (points < 2)
    throw std::invalid_argument("quantile grid needs at least 2 points");
}

std::string
to_string(Distribution d)
{
  switch (d) {
    case Distribution::std_normal:
      return "std_normal";
    case Distribution::scaled_gamma:
      return "scaled_gamma";
  }
  return "unknown";
}

Distribution
distribution_from_string(const std::string& name)
{
  if (name == "std_normal" || name == "normal" || name == "gauss")
    return Distribution::std_normal;
  if (name == "scaled_gamma" || name == "gamma")
    return Distribution::scaled_gamma;
  throw std::invalid_argument("unknown distribution '" + name +
                              "' (expected std_normal or scaled_gamma)");
}

double
empirical_quantile(std::span<const double> values, double p)
{
  if (values.empty())
    throw std::invalid_argument("empirical_quantile: empty input");
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("empirical_quantile: p must lie in [0, 1]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double
distribution_quantile(Distribution d, double p)
{
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("distribution_quantile: p must lie in [0, 1]");
  switch (d) {
    case Distribution::std_normal:
      if (p == 0.0)
        return -std::numeric_limits<double>::infinity();
      if (p == 1.0)
        return std::numeric_limits<double>::infinity();
      return boost::math::quantile(boost::math::normal_distribution<>(0.0, 1.0), p);
    case Distribution::scaled_gamma:
      if (p == 1.0)
        return std::numeric_limits<double>::infinity();
      return boost::math::quantile(boost::math::gamma_distribution<>(3.0, 2.0), p) /
             5.0;
  }
  throw std::invalid_argument("unknown distribution");
}

GridPtr
interquantile_grid(std::span<const double> sample, const QuantileSpec& spec)
{
  spec.validate();
  const double lo = empirical_quantile(sample, spec.p_lo);
  const double hi = empirical_quantile(sample, spec.p_hi);
  if (!(lo < hi))
    throw std::invalid_argument("degenerate interquantile interval: q_lo = q_hi = " +
                                std::to_string(lo));
  return make_grid(lo, hi, spec.points);
}

GridPtr
interquantile_grid(Distribution d, const QuantileSpec& spec)
{
  spec.validate();
  const double lo = distribution_quantile(d, spec.p_lo);
  const double hi = distribution_quantile(d, spec.p_hi);
  if (!std::isfinite(lo) || !std::isfinite(hi))
    throw std::invalid_argument("interquantile interval of " + to_string(d) +
                                " is unbounded at the requested levels");
  return make_grid(lo, hi, spec.points);
}

double
riemann_l2_dist_sq(const Curve& a, const Curve& b)
{
  require_same_grid(a, b, "riemann_l2_dist_sq");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return a.grid().step() * s;
}

double
riemann_l2_sq(const Curve& a)
{
  double s = 0.0;
  for (double v : a.values())
    s += v * v;
  return a.grid().step() * s;
}

} // namespace kernsel
