#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace kernsel {

//! Equispaced evaluation grid.
class Grid
{
public:
  //! m equispaced points from lo to hi. Requires m >= 2 and lo < hi.
  Grid(double lo, double hi, std::size_t m);
  //! Adopts explicit points; they must be strictly increasing with constant
  //! spacing (relative tolerance 1e-9 on the step).
  static Grid from_points(std::vector<double> points);

  std::span<const double> points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }
  double step() const noexcept { return step_; }
  double front() const noexcept { return points_.front(); }
  double back() const noexcept { return points_.back(); }
  double operator[](std::size_t k) const noexcept { return points_[k]; }

  bool same_as(const Grid& other) const noexcept;

private:
  Grid() = default;
  std::vector<double> points_;
  double step_ = 0.0;
};

using GridPtr = std::shared_ptr<const Grid>;

inline GridPtr
make_grid(double lo, double hi, std::size_t m)
{
  return std::make_shared<const Grid>(lo, hi, m);
}

//! Function values on a grid. Points whose value could not be formed
//! (non-finite quotient, vanishing weights) carry a flag.
class Curve
{
public:
  Curve(GridPtr grid, std::vector<double> values);
  Curve(GridPtr grid, std::vector<double> values, std::vector<bool> flags);

  static Curve zeros(GridPtr grid);

  const Grid& grid() const noexcept { return *grid_; }
  const GridPtr& grid_ptr() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  std::vector<double>& mutable_values() noexcept { return values_; }
  double operator[](std::size_t k) const noexcept { return values_[k]; }
  std::size_t size() const noexcept { return values_.size(); }

  bool flagged(std::size_t k) const noexcept { return flags_[k]; }
  void set_flag(std::size_t k, bool on = true) { flags_[k] = on; }
  std::size_t flag_count() const noexcept;

  bool shares_grid(const Curve& other) const noexcept
  {
    return grid_ == other.grid_ || grid_->same_as(*other.grid_);
  }

private:
  GridPtr grid_;
  std::vector<double> values_;
  std::vector<bool> flags_;
};

//! Throws std::invalid_argument if the two curves live on different grids.
void require_same_grid(const Curve& a, const Curve& b, const char* context);

struct QuantileSpec
{
  double p_lo = 0.02;
  double p_hi = 0.98;
  std::size_t points = 100;

  void validate() const;
};

enum class Distribution
{
  std_normal,
  //! G / 5 with G ~ Gamma(shape 3, scale 2).
  scaled_gamma
};

std::string to_string(Distribution d);
Distribution distribution_from_string(const std::string& name);

//! Order-statistic quantile interpolating linearly at rank p (n - 1) + 1.
double empirical_quantile(std::span<const double> values, double p);

//! Exact quantile of a named distribution.
double distribution_quantile(Distribution d, double p);

//! m equispaced points between the p_lo and p_hi sample quantiles.
GridPtr interquantile_grid(std::span<const double> sample, const QuantileSpec& spec);
//! m equispaced points between the p_lo and p_hi distribution quantiles.
GridPtr interquantile_grid(Distribution d, const QuantileSpec& spec);

//! step * sum_k (a_k - b_k)^2.
double riemann_l2_dist_sq(const Curve& a, const Curve& b);
//! step * sum_k a_k^2.
double riemann_l2_sq(const Curve& a);

} // namespace kernsel
