#pragma once

#include "kernsel/estimators.hpp"
#include "kernsel/kernel.hpp"
#include "kernsel/numerics.hpp"

#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace kernsel {

//! Candidate bandwidths, strictly increasing and positive.
class BandwidthGrid
{
public:
  explicit BandwidthGrid(std::vector<double> values);
  static BandwidthGrid equispaced(double lo, double hi, std::size_t count);
  //! 75 equispaced values from 0.01 to 1.
  static BandwidthGrid standard() { return equispaced(0.01, 1.0, 75); }

  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double h_min() const noexcept { return values_.front(); }
  double h_max() const noexcept { return values_.back(); }

private:
  std::vector<double> values_;
};

//! Outcome of a bandwidth selector: the minimizer and the full trace.
struct SelectionResult
{
  Bandwidth selected{ 1.0 };
  std::size_t index = 0;
  std::vector<double> bandwidths;
  std::vector<double> criterion;
  //! Named per-bandwidth component traces, in insertion order.
  std::vector<std::pair<std::string, std::vector<double>>> diagnostics;

  //! Throws std::out_of_range for an unknown name.
  const std::vector<double>& trace(std::string_view name) const;
  double selected_criterion() const { return criterion[index]; }
};

//! Index of the smallest criterion value; ties go to the smallest index and
//! NaN entries never win.
std::size_t argmin_first(std::span<const double> criterion);

//! CSV with header "bandwidth,criterion,<diagnostic names>".
void write_selection_csv(std::ostream& os, const SelectionResult& r);

// -- Penalized comparison to overfitting -----------------------------------

//! crit(h) = ||bf_h - bf_hmin||^2 + multiplier * 2 <K_hmin, K_h> sum Y_i^2 / n^2.
SelectionResult pco_select_numerator(const Sample& s,
                                     const GaussianMixtureKernel& k,
                                     const BandwidthGrid& bandwidths,
                                     const GridPtr& grid,
                                     double penalty_multiplier = 1.0);

//! Same criterion from precomputed numerator curves; the first family member
//! is the overfitting reference.
SelectionResult pco_select_numerator(const CurveFamily& numerator,
                                     const Sample& s,
                                     const GaussianMixtureKernel& k,
                                     double penalty_multiplier = 1.0);

//! crit'(h) = ||f_h - f_hmin||^2 + multiplier * 2 <K_hmin, K_h> / n.
SelectionResult pco_select_density(const Sample& s,
                                   const GaussianMixtureKernel& k,
                                   const BandwidthGrid& bandwidths,
                                   const GridPtr& grid,
                                   double penalty_multiplier = 2.0);

SelectionResult pco_select_density(const CurveFamily& density,
                                   std::size_t n,
                                   const GaussianMixtureKernel& k,
                                   double penalty_multiplier = 2.0);

// -- Goldenshluger-Lepski --------------------------------------------------

//! Minimizes A(h) + V(h) with
//!   A(h) = max_eta (||bf_{h,eta} - bf_eta||^2 - V(eta))_+,
//!   V(h) = upsilon ||K||_2^2 (1/n sum Y_i^2) ||K||_1^2 / (n h).
//! Traces "A", "V" and "distance_max" are attached.
SelectionResult gl_select_numerator(const Sample& s,
                                    const GaussianMixtureKernel& k,
                                    const BandwidthGrid& bandwidths,
                                    const GridPtr& grid,
                                    double upsilon = 1.0);

//! Density counterpart with V'(h) = chi ||K||_2^2 ||K||_1^2 / (n h).
SelectionResult gl_select_density(const Sample& s,
                                  const GaussianMixtureKernel& k,
                                  const BandwidthGrid& bandwidths,
                                  const GridPtr& grid,
                                  double chi = 1.0);

// -- Cross-validation ------------------------------------------------------

//! Integral CV for the numerator with the Gaussian kernel:
//!   CV(h) = int bf_h^2 - 2 / (n (n-1)) sum_{i != j} Y_i Y_j phi(X_i - X_j; h^2).
//! The integral term is the closed form (1/n^2) sum_ij Y_i Y_j phi(X_i - X_j; 2h^2).
//! Requires n >= 2.
SelectionResult cv_select_numerator(const Sample& s,
                                    const BandwidthGrid& bandwidths);

//! Leave-one-out CV for single-bandwidth Nadaraya-Watson with the Gaussian
//! kernel. Rows whose prediction is undefined contribute Y_i^2.
SelectionResult loo_cv_select_nw(const Sample& s,
                                 const BandwidthGrid& bandwidths);

// -- Oracle ----------------------------------------------------------------

//! Member of the family with the smallest Riemann ISE against truth.
SelectionResult oracle_select(const CurveFamily& family, const Curve& truth);

//! Riemann ISE where non-finite estimate values count as 0.
double scored_ise(const Curve& estimate, const Curve& truth);

} // namespace kernsel
