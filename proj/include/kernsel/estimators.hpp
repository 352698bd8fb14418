#pragma once

#include "kernsel/kernel.hpp"
#include "kernsel/numerics.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace kernsel {

//! Paired regression observations (X_i, Y_i).
class Sample
{
public:
  //! Throws std::invalid_argument on length mismatch, empty input or
  //! non-finite values.
  Sample(std::vector<double> x, std::vector<double> y);

  std::span<const double> x() const noexcept { return x_; }
  std::span<const double> y() const noexcept { return y_; }
  std::size_t size() const noexcept { return x_.size(); }

  //! Same covariates, new responses.
  Sample with_y(std::vector<double> y) const;
  //! Copy with row i removed.
  Sample without(std::size_t i) const;
  //! (1/n) sum Y_i^2.
  double mean_y_sq() const noexcept;

private:
  std::vector<double> x_;
  std::vector<double> y_;
};

//! Estimates sharing one grid, indexed by an increasing bandwidth list.
struct CurveFamily
{
  std::vector<double> bandwidths;
  std::vector<Curve> curves;

  std::size_t size() const noexcept { return curves.size(); }
};

//! Parzen-Rosenblatt estimate (1/n) sum_i K_h(X_i - x) at each grid point.
Curve density_curve(const Sample& s, const GaussianMixtureKernel& k, Bandwidth h,
                    const GridPtr& grid);

//! (1/n) sum_i Y_i K_h(X_i - x) at each grid point.
Curve numerator_curve(const Sample& s, const GaussianMixtureKernel& k,
                      Bandwidth h, const GridPtr& grid);

//! (1/n) sum_i Y_i (K_eta * K_h)(X_i - x).
Curve convolved_numerator_curve(const Sample& s, const GaussianMixtureKernel& k,
                                Bandwidth h, Bandwidth eta, const GridPtr& grid);

//! (K_eta * density estimate at bandwidth h)(x).
Curve convolved_density_curve(const Sample& s, const GaussianMixtureKernel& k,
                              Bandwidth h, Bandwidth eta, const GridPtr& grid);

//! Pointwise num / den.
//!
//! Without clip, the raw ratio is returned and points with |den| < 1e-12
//! or a non-finite ratio are flagged. With clip, points where |den| < clip
//! are evaluated as num / (sign(den) clip) and flagged.
Curve quotient_curve(const Curve& num, const Curve& den,
                     std::optional<double> clip = std::nullopt);

//! Single-bandwidth Nadaraya-Watson estimate sum_i w_i(x) Y_i. Points where
//! the weights cannot be normalized are flagged and set to 0. For a
//! single-component kernel, weights that underflow are renormalized around
//! the nearest observation, so only exact degeneracy is flagged.
Curve nw_curve(const Sample& s, const GaussianMixtureKernel& k, Bandwidth h,
               const GridPtr& grid);

//! Leave-one-out Nadaraya-Watson prediction at X_i (0-based i). Returns
//! nullopt when the remaining weights sum to zero. Requires n >= 2.
std::optional<double> loo_nw_predict(const Sample& s,
                                     const GaussianMixtureKernel& k,
                                     Bandwidth h, std::size_t i);

//! Density and numerator estimates for every bandwidth, computed in one pass
//! over the kernel evaluations.
struct DensityNumeratorFamilies
{
  CurveFamily density;
  CurveFamily numerator;
};
DensityNumeratorFamilies density_numerator_families(
  const Sample& s, const GaussianMixtureKernel& k,
  std::span<const double> bandwidths, const GridPtr& grid);

} // namespace kernsel
