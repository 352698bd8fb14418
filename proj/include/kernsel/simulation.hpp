#pragma once

#include "kernsel/estimators.hpp"
#include "kernsel/kernel.hpp"
#include "kernsel/numerics.hpp"
#include "kernsel/selection.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace kernsel {

enum class RegressionFn
{
  b1, //!< exp(-x^2 / 2)
  b2, //!< x^2 / 4 - 1
  b3, //!< sin(pi x)
  b4  //!< exp(-|x|)
};

std::string to_string(RegressionFn b);
RegressionFn regression_fn_from_string(const std::string& name);
double regression_value(RegressionFn b, double x) noexcept;

//! Y = b(X) + sigma * N(0, 1), X drawn from x_law.
struct ModelSpec
{
  RegressionFn regression = RegressionFn::b1;
  Distribution x_law = Distribution::std_normal;
  double sigma = 0.1;
};

//! Density of X under the named law.
double x_density(Distribution d, double x) noexcept;

enum class Method
{
  pco,
  gl,
  cv_bf,
  cv_nw,
  oracle
};

enum class Target
{
  bf,
  f,
  b
};

std::string to_string(Method m);
std::string to_string(Target t);
Method method_from_string(const std::string& name);
Target target_from_string(const std::string& name);

struct ExperimentConfig
{
  ModelSpec model;
  std::size_t n = 1000;
  std::size_t reps = 200;
  std::uint64_t seed = 1;
  BandwidthGrid bandwidths = BandwidthGrid::standard();
  QuantileSpec quantiles;
  std::vector<Method> methods{ Method::pco, Method::cv_bf, Method::cv_nw,
                               Method::oracle };
  std::vector<Target> targets{ Target::bf, Target::b };
  GaussianMixtureKernel kernel = GaussianMixtureKernel::order7();
  //! GL constants for the numerator and the density.
  double upsilon = 1.0;
  double chi = 1.0;
  //! Multipliers applied to pen(h) and pen'(h).
  double pco_numerator_multiplier = 1.0;
  double pco_density_multiplier = 2.0;
  std::optional<double> quotient_clip;
  //! Per-sample empirical quantile grid instead of the fixed theoretical one.
  bool empirical_grid = false;

  bool has(Method m) const;
  bool has(Target t) const;
  //! Throws std::invalid_argument when the configuration cannot be run.
  void validate() const;
};

//! Seed of replication `rep`: a splitmix64 mix of the base seed and index.
std::uint64_t replication_seed(std::uint64_t base_seed, std::size_t rep) noexcept;

//! X_i i.i.d. from the model law, Y_i = b(X_i) + sigma eps_i. Gaussian draws
//! use Box-Muller on a 64-bit Mersenne Twister; Gamma(3, scale 2) is the sum
//! of three exponentials. Bit-identical for identical arguments.
Sample generate_sample(const ModelSpec& model, std::size_t n, std::uint64_t seed);

struct TrueCurves
{
  Curve f;
  Curve bf;
  Curve b;
};

//! f, b f and b on the grid; f is 0 outside the support of the law.
TrueCurves true_curves(const ModelSpec& model, const GridPtr& grid);

//! (K_h * (b f))(x) by adaptive quadrature, the mean of the numerator
//! estimate at bandwidth h.
Curve smoothed_numerator_truth(const ModelSpec& model,
                               const GaussianMixtureKernel& k, Bandwidth h,
                               const GridPtr& grid);

//! E(Y^2) = E(b(X)^2) + sigma^2 by quadrature.
double second_moment_y(const ModelSpec& model);

//! Result of one estimator on one replication.
struct Outcome
{
  Target target = Target::bf;
  //! Column label: PCO, GL, CV, Or, Or-N.
  std::string method;
  double ise = 0.0;
  //! Selected bandwidth; for quotients, the numerator bandwidth.
  double bandwidth = 0.0;
  //! Denominator bandwidth of a quotient, NaN otherwise.
  double density_bandwidth = 0.0;
  //! Grid points flagged while forming the estimate.
  std::size_t flagged = 0;
};

struct ReplicationRecord
{
  std::size_t rep = 0;
  std::uint64_t seed = 0;
  std::vector<Outcome> outcomes;

  //! Throws std::out_of_range if absent.
  const Outcome& find(Target t, const std::string& method) const;
};

nlohmann::json to_json(const ReplicationRecord& r);

ReplicationRecord run_replication(const ExperimentConfig& config, std::size_t rep);

struct ReportRow
{
  Target target = Target::bf;
  std::string method;
  std::size_t reps = 0;
  double mise_x100 = 0.0;
  double std_x100 = 0.0;
  double mean_bandwidth = 0.0;
  double std_bandwidth = 0.0;
  double mean_density_bandwidth = 0.0;
  std::size_t flagged = 0;
};

struct MISEReport
{
  ExperimentConfig config;
  std::vector<ReportRow> rows;

  const ReportRow& row(Target t, const std::string& method) const;
};

//! Mean and sample standard deviation (0 for a single replication) of
//! 100 ISE and of selected bandwidths, in replication order.
MISEReport aggregate(const ExperimentConfig& config,
                     const std::vector<ReplicationRecord>& records);

//! Worker count: KERNSEL_THREADS if set and positive, otherwise the
//! hardware concurrency.
std::size_t default_thread_count();

//! Runs all replications, possibly on several threads. Records come back in
//! replication order.
std::vector<ReplicationRecord> run_replications(
  const ExperimentConfig& config, std::size_t threads = default_thread_count());

MISEReport run_experiment(const ExperimentConfig& config,
                          std::size_t threads = default_thread_count());

//! Parses an INI-style file:
//!
//!   [model]       regression = b1, law = std_normal, sigma = 0.1
//!   [experiment]  n, reps, seed, methods = pco,cv_bf, targets = bf,b
//!   [bandwidths]  min = 0.01, max = 1, count = 75
//!   [grid]        p_lo = 0.02, p_hi = 0.98, points = 100, empirical = false
//!   [kernel]      spec = order7 | gauss | c1:v1,c2:v2,...
//!   [gl]          upsilon, chi
//!   [pco]         numerator_multiplier, density_multiplier
//!   [quotient]    clip
//!
//! Missing keys keep their defaults.
ExperimentConfig parse_experiment_config(std::istream& in);

} // namespace kernsel
