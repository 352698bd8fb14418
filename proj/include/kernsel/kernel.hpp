#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace kernsel {

//! Positive smoothing scale. Construction rejects h <= 0 and non-finite h.
class Bandwidth
{
public:
  explicit Bandwidth(double value);
  double value() const noexcept { return value_; }

  friend bool operator==(Bandwidth a, Bandwidth b) noexcept
  {
    return a.value_ == b.value_;
  }

private:
  double value_;
};

struct MixtureComponent
{
  double coefficient;
  double variance;

  friend bool operator==(const MixtureComponent&,
                         const MixtureComponent&) = default;
};

//! Signed mixture of centered Gaussian densities,
//! K(x) = sum_j c_j * phi(x; v_j).
//!
//! Inner products, convolutions and moments are closed form. The L1 and sup
//! norms are computed numerically on first use; copies share the memoized
//! values.
class GaussianMixtureKernel
{
public:
  //! Throws std::invalid_argument unless every variance is positive and
  //! the coefficients sum to one (within 1e-9).
  explicit GaussianMixtureKernel(std::vector<MixtureComponent> components);

  //! 4 n_1 - 6 n_2 + 4 n_3 - n_4, a kernel of order 7.
  static GaussianMixtureKernel order7();
  //! Standard normal density.
  static GaussianMixtureKernel gauss();
  //! "order7" or "gauss"; throws std::invalid_argument otherwise.
  static GaussianMixtureKernel preset(const std::string& name);
  //! Parses "c1:v1,c2:v2,..." or a preset name.
  static GaussianMixtureKernel parse(const std::string& text);

  std::span<const MixtureComponent> components() const noexcept
  {
    return components_;
  }
  double max_variance() const noexcept { return max_variance_; }

  double eval(double x) const noexcept;
  //! (1/h) K(x/h).
  double scaled_eval(Bandwidth h, double x) const noexcept;
  //! Mixture with every variance multiplied by h^2, i.e. K_h.
  GaussianMixtureKernel scaled(Bandwidth h) const;

  //! <K_{h1}, K_{h2}> = sum_ij c_i c_j / sqrt(2 pi (v_i h1^2 + v_j h2^2)).
  double pair_inner_product(Bandwidth h1, Bandwidth h2) const noexcept;
  //! ||K||_2^2.
  double l2_norm_sq() const noexcept;

  //! K_eta * K_h as a mixture with components (c_i c_j, v_i eta^2 + v_j h^2).
  GaussianMixtureKernel convolve(Bandwidth h, Bandwidth eta) const;

  //! int u^k K(u) du.
  double moment(unsigned k) const noexcept;

  double l1_norm() const;
  double sup_norm() const;

  friend bool operator==(const GaussianMixtureKernel& a,
                         const GaussianMixtureKernel& b)
  {
    return a.components_ == b.components_;
  }

private:
  struct NormCache;

  std::vector<MixtureComponent> components_;
  double max_variance_ = 0.0;
  std::shared_ptr<NormCache> cache_;
};

//! Centered Gaussian density with variance v.
double gaussian_density(double x, double variance) noexcept;

} // namespace kernsel
