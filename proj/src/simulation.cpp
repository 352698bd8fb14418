#include "kernsel/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <mutex>
#include <numbers>
#include <random>
#include <stdexcept>
#include <thread>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace kernsel {

namespace {

using Quadrature = boost::math::quadrature::gauss_kronrod<double, 61>;

double
integrate(const std::function<double(double)>& fn, double a, double b)
{
  double err = 0.0;
  return Quadrature::integrate(fn, a, b, 15, 1e-12, &err);
}

std::uint64_t
splitmix64(std::uint64_t x) noexcept
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class Draws
{
public:
  explicit Draws(std::uint64_t seed)
    : engine_(seed)
  {}

  // uniform on [0, 1) with 53 random bits
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal()
  {
    if (spare_) {
      const double z = *spare_;
      spare_.reset();
      return z;
    }
    const double u1 = 1.0 - uniform(); // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(t);
    return r * std::cos(t);
  }

  double exponential(double scale) { return -scale * std::log(1.0 - uniform()); }

private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

double
draw_x(Distribution law, Draws& draws)
{
  switch (law) {
    case Distribution::std_normal:
      return draws.normal();
    case Distribution::scaled_gamma:
      return (draws.exponential(2.0) + draws.exponential(2.0) +
              draws.exponential(2.0)) /
             5.0;
  }
  return 0.0;
}

const char*
method_label(Target t, Method m)
{
  switch (m) {
    case Method::pco:
      return "PCO";
    case Method::gl:
      return "GL";
    case Method::cv_bf:
      return "CV";
    case Method::cv_nw:
      return t == Target::b ? "CV" : "CV-NW";
    case Method::oracle:
      return "Or";
  }
  return "?";
}

} // namespace

std::string
to_string(RegressionFn b)
{
  switch (b) {
    case RegressionFn::b1:
      return "b1";
    case RegressionFn::b2:
      return "b2";
    case RegressionFn::b3:
      return "b3";
    case RegressionFn::b4:
      return "b4";
  }
  return "?";
}

RegressionFn
regression_fn_from_string(const std::string& name)
{
  if (name == "b1")
    return RegressionFn::b1;
  if (name == "b2")
    return RegressionFn::b2;
  if (name == "b3")
    return RegressionFn::b3;
  if (name == "b4")
    return RegressionFn::b4;
  throw std::invalid_argument("unknown regression function '" + name +
                              "' (expected b1..b4)");
}

double
regression_value(RegressionFn b, double x) noexcept
{
  switch (b) {
    case RegressionFn::b1:
      return std::exp(-0.5 * x * x);
    case RegressionFn::b2:
      return 0.25 * x * x - 1.0;
    case RegressionFn::b3:
      return std::sin(std::numbers::pi * x);
    case RegressionFn::b4:
      return std::exp(-std::abs(x));
  }
  return 0.0;
}

double
x_density(Distribution d, double x) noexcept
{
  switch (d) {
    case Distribution::std_normal:
      return gaussian_density(x, 1.0);
    case Distribution::scaled_gamma:
      return x > 0.0 ? 125.0 / 16.0 * x * x * std::exp(-2.5 * x) : 0.0;
  }
  return 0.0;
}

std::string
to_string(Method m)
{
  switch (m) {
    case Method::pco:
      return "pco";
    case Method::gl:
      return "gl";
    case Method::cv_bf:
      return "cv_bf";
    case Method::cv_nw:
      return "cv_nw";
    case Method::oracle:
      return "oracle";
  }
  return "?";
}

std::string
to_string(Target t)
{
  switch (t) {
    case Target::bf:
      return "bf";
    case Target::f:
      return "f";
    case Target::b:
      return "b";
  }
  return "?";
}

Method
method_from_string(const std::string& name)
{
  if (name == "pco")
    return Method::pco;
  if (name == "gl")
    return Method::gl;
  if (name == "cv_bf" || name == "cv")
    return Method::cv_bf;
  if (name == "cv_nw" || name == "cv-nw")
    return Method::cv_nw;
  if (name == "oracle" || name == "or")
    return Method::oracle;
  throw std::invalid_argument("unknown method '" + name +
                              "' (expected pco, gl, cv_bf, cv_nw, oracle)");
}

Target
target_from_string(const std::string& name)
{
  if (name == "bf")
    return Target::bf;
  if (name == "f")
    return Target::f;
  if (name == "b")
    return Target::b;
  throw std::invalid_argument("unknown target '" + name + "' (expected bf, f, b)");
}

bool
ExperimentConfig::has(Method m) const
{
  return std::find(methods.begin(), methods.end(), m) != methods.end();
}

bool
ExperimentConfig::has(Target t) const
{
  return std::find(targets.begin(), targets.end(), t) != targets.end();
}

void
ExperimentConfig::validate() const
{
  if (n < 2)
    throw std::invalid_argument("experiment needs n >= 2");
  if (reps < 1)
    throw std::invalid_argument("experiment needs reps >= 1");
  if (!(model.sigma >= 0.0) || !std::isfinite(model.sigma))
    throw std::invalid_argument("noise level sigma must be nonnegative");
  if (!(upsilon > 0.0) || !(chi > 0.0))
    throw std::invalid_argument("GL constants must be positive");
  if (quotient_clip && !(*quotient_clip > 0.0))
    throw std::invalid_argument("quotient clip must be positive");
  if (methods.empty() || targets.empty())
    throw std::invalid_argument("experiment needs at least one method and target");
  quantiles.validate();
}

std::uint64_t
replication_seed(std::uint64_t base_seed, std::size_t rep) noexcept
{
  return splitmix64(base_seed ^ splitmix64(static_cast<std::uint64_t>(rep)));
}

Sample
generate_sample(const ModelSpec& model, std::size_t n, std::uint64_t seed)
{
  if (n < 1)
    throw std::invalid_argument("sample size must be at least 1");
  Draws draws(seed);
  std::vector<double> x(n), y(n);
  for (auto& xi : x)
    xi = draw_x(model.x_law, draws);
  for (std::size_t i = 0; i < n; ++i)
    y[i] = regression_value(model.regression, x[i]) + model.sigma * draws.normal();
  return Sample(std::move(x), std::move(y));
}

TrueCurves
true_curves(const ModelSpec& model, const GridPtr& grid)
{
  const auto m = grid->size();
  std::vector<double> f(m), bf(m), b(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double x = (*grid)[k];
    f[k] = x_density(model.x_law, x);
    b[k] = regression_value(model.regression, x);
    bf[k] = b[k] * f[k];
  }
  return { Curve(grid, std::move(f)), Curve(grid, std::move(bf)),
           Curve(grid, std::move(b)) };
}

Curve
smoothed_numerator_truth(const ModelSpec& model, const GaussianMixtureKernel& k,
                         Bandwidth h, const GridPtr& grid)
{
  const auto kh = k.scaled(h);
  const double reach = 40.0 * std::sqrt(kh.max_variance());
  std::vector<double> values(grid->size());
  for (std::size_t g = 0; g < grid->size(); ++g) {
    const double x = (*grid)[g];
    auto integrand = [&](double t) {
      return kh.eval(x - t) * regression_value(model.regression, t) *
             x_density(model.x_law, t);
    };
    double lo = x - reach;
    const double hi = x + reach;
    if (model.x_law == Distribution::scaled_gamma)
      lo = std::max(lo, 0.0);
    double total = 0.0;
    if (lo < 0.0 && hi > 0.0)
      total = integrate(integrand, lo, 0.0) + integrate(integrand, 0.0, hi);
    else if (lo < hi)
      total = integrate(integrand, lo, hi);
    values[g] = total;
  }
  return Curve(grid, std::move(values));
}

double
second_moment_y(const ModelSpec& model)
{
  auto integrand = [&](double t) {
    const double b = regression_value(model.regression, t);
    return b * b * x_density(model.x_law, t);
  };
  const double inf = std::numeric_limits<double>::infinity();
  double e_b2 = 0.0;
  if (model.x_law == Distribution::scaled_gamma)
    e_b2 = integrate(integrand, 0.0, inf);
  else
    e_b2 = integrate(integrand, -inf, 0.0) + integrate(integrand, 0.0, inf);
  return e_b2 + model.sigma * model.sigma;
}

const Outcome&
ReplicationRecord::find(Target t, const std::string& method) const
{
  for (const auto& o : outcomes)
    if (o.target == t && o.method == method)
      return o;
  throw std::out_of_range("replication has no outcome for " + to_string(t) + "/" +
                          method);
}

nlohmann::json
to_json(const ReplicationRecord& r)
{
  nlohmann::json j;
  j["rep"] = r.rep;
  j["seed"] = r.seed;
  auto& arr = j["outcomes"] = nlohmann::json::array();
  for (const auto& o : r.outcomes) {
    nlohmann::json e{ { "target", to_string(o.target) },
                      { "method", o.method },
                      { "ise", o.ise },
                      { "bandwidth", o.bandwidth },
                      { "flagged", o.flagged } };
    if (std::isfinite(o.density_bandwidth))
      e["density_bandwidth"] = o.density_bandwidth;
    arr.push_back(std::move(e));
  }
  return j;
}

ReplicationRecord
run_replication(const ExperimentConfig& config, std::size_t rep)
{
  const auto seed = replication_seed(config.seed, rep);
  const Sample sample = generate_sample(config.model, config.n, seed);
  const GridPtr grid = config.empirical_grid
                         ? interquantile_grid(sample.x(), config.quantiles)
                         : interquantile_grid(config.model.x_law, config.quantiles);
  const TrueCurves truth = true_curves(config.model, grid);
  const auto& K = config.kernel;
  const auto& H = config.bandwidths;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  ReplicationRecord record;
  record.rep = rep;
  record.seed = seed;

  const bool want_bf = config.has(Target::bf);
  const bool want_f = config.has(Target::f);
  const bool want_b = config.has(Target::b);
  const bool need_family = config.has(Method::pco) || config.has(Method::oracle) ||
                           config.has(Method::gl);

  std::optional<DensityNumeratorFamilies> fam;
  if (need_family)
    fam = density_numerator_families(sample, K, H.values(), grid);

  std::optional<SelectionResult> pco_num, pco_den, gl_num, gl_den, or_num, or_den;
  if (config.has(Method::pco)) {
    if (want_bf || want_b)
      pco_num = pco_select_numerator(fam->numerator, sample, K,
                                     config.pco_numerator_multiplier);
    if (want_f || want_b)
      pco_den = pco_select_density(fam->density, sample.size(), K,
                                   config.pco_density_multiplier);
  }
  if (config.has(Method::gl)) {
    if (want_bf || want_b)
      gl_num = gl_select_numerator(sample, K, H, grid, config.upsilon);
    if (want_f || want_b)
      gl_den = gl_select_density(sample, K, H, grid, config.chi);
  }
  if (config.has(Method::oracle)) {
    if (want_bf || want_b)
      or_num = oracle_select(fam->numerator, truth.bf);
    if (want_f || want_b)
      or_den = oracle_select(fam->density, truth.f);
  }

  auto single = [&](Target t, Method m, const SelectionResult& sel,
                    const CurveFamily& family, const Curve& target) {
    const Curve& est = family.curves[sel.index];
    record.outcomes.push_back({ t, method_label(t, m), scored_ise(est, target),
                                sel.selected.value(), nan, est.flag_count() });
  };

  if (want_bf) {
    if (pco_num)
      single(Target::bf, Method::pco, *pco_num, fam->numerator, truth.bf);
    if (gl_num)
      single(Target::bf, Method::gl, *gl_num, fam->numerator, truth.bf);
    // with an oracle requested, CV is scored on the same Gaussian-kernel
    // family the oracle minimizes over
    std::optional<DensityNumeratorFamilies> gauss_fam;
    if (config.has(Method::cv_bf) && config.has(Method::oracle))
      gauss_fam = density_numerator_families(sample, GaussianMixtureKernel::gauss(),
                                             H.values(), grid);
    if (config.has(Method::cv_bf)) {
      const auto sel = cv_select_numerator(sample, H);
      const Curve est = gauss_fam ? gauss_fam->numerator.curves[sel.index]
                                  : numerator_curve(sample, GaussianMixtureKernel::gauss(),
                                                    sel.selected, grid);
      record.outcomes.push_back({ Target::bf, "CV", scored_ise(est, truth.bf),
                                  sel.selected.value(), nan, 0 });
    }
    if (or_num)
      single(Target::bf, Method::oracle, *or_num, fam->numerator, truth.bf);
    if (gauss_fam) {
      const auto sel = oracle_select(gauss_fam->numerator, truth.bf);
      record.outcomes.push_back({ Target::bf, "Or-N", sel.selected_criterion(),
                                  sel.selected.value(), nan, 0 });
    }
  }

  if (want_f) {
    if (pco_den)
      single(Target::f, Method::pco, *pco_den, fam->density, truth.f);
    if (gl_den)
      single(Target::f, Method::gl, *gl_den, fam->density, truth.f);
    if (or_den)
      single(Target::f, Method::oracle, *or_den, fam->density, truth.f);
  }

  if (want_b) {
    if (config.has(Method::cv_nw)) {
      const auto sel = loo_cv_select_nw(sample, H);
      const Curve est =
        nw_curve(sample, GaussianMixtureKernel::gauss(), sel.selected, grid);
      record.outcomes.push_back({ Target::b, "CV", scored_ise(est, truth.b),
                                  sel.selected.value(), nan, est.flag_count() });
    }
    auto ratio = [&](Method m, const SelectionResult& num, const SelectionResult& den) {
      const Curve q = quotient_curve(fam->numerator.curves[num.index],
                                     fam->density.curves[den.index],
                                     config.quotient_clip);
      record.outcomes.push_back({ Target::b, method_label(Target::b, m),
                                  scored_ise(q, truth.b), num.selected.value(),
                                  den.selected.value(), q.flag_count() });
    };
    if (pco_num && pco_den)
      ratio(Method::pco, *pco_num, *pco_den);
    if (gl_num && gl_den)
      ratio(Method::gl, *gl_num, *gl_den);
    if (or_num && or_den)
      ratio(Method::oracle, *or_num, *or_den);
  }

  return record;
}

const ReportRow&
MISEReport::row(Target t, const std::string& method) const
{
  for (const auto& r : rows)
    if (r.target == t && r.method == method)
      return r;
  throw std::out_of_range("report has no row for " + to_string(t) + "/" + method);
}

MISEReport
aggregate(const ExperimentConfig& config,
          const std::vector<ReplicationRecord>& records)
{
  MISEReport report{ config, {} };
  if (records.empty())
    return report;

  auto mean_std = [](const std::vector<double>& v) {
    double mean = 0.0;
    for (double e : v)
      mean += e;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double e : v)
      ss += (e - mean) * (e - mean);
    const double sd =
      v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    return std::pair{ mean, sd };
  };

  // Row layout follows the first record; every record has the same outcomes.
  for (const auto& proto : records.front().outcomes) {
    std::vector<double> ise, bw, dbw;
    std::size_t flagged = 0;
    for (const auto& rec : records) {
      const auto& o = rec.find(proto.target, proto.method);
      ise.push_back(100.0 * o.ise);
      bw.push_back(o.bandwidth);
      if (std::isfinite(o.density_bandwidth))
        dbw.push_back(o.density_bandwidth);
      flagged += o.flagged;
    }
    ReportRow row;
    row.target = proto.target;
    row.method = proto.method;
    row.reps = records.size();
    std::tie(row.mise_x100, row.std_x100) = mean_std(ise);
    std::tie(row.mean_bandwidth, row.std_bandwidth) = mean_std(bw);
    row.mean_density_bandwidth =
      dbw.empty() ? std::numeric_limits<double>::quiet_NaN() : mean_std(dbw).first;
    row.flagged = flagged;
    report.rows.push_back(row);
  }
  return report;
}

std::size_t
default_thread_count()
{
  if (const char* env = std::getenv("KERNSEL_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0)
      return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<ReplicationRecord>
run_replications(const ExperimentConfig& config, std::size_t threads)
{
  config.validate();
  std::vector<ReplicationRecord> records(config.reps);
  std::atomic<std::size_t> next{ 0 };
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t rep = next.fetch_add(1);
      if (rep >= config.reps)
        return;
      try {
        records[rep] = run_replication(config, rep);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure)
          failure = std::current_exception();
        next = config.reps;
        return;
      }
    }
  };

  threads = std::clamp<std::size_t>(threads, 1, config.reps);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t)
      pool.emplace_back(worker);
  }
  if (failure)
    std::rethrow_exception(failure);
  return records;
}

MISEReport
run_experiment(const ExperimentConfig& config, std::size_t threads)
{
  return aggregate(config, run_replications(config, threads));
}

} // namespace kernsel
