// kernsel: bandwidth selection for kernel regression estimators.

#include "kernsel/estimators.hpp"
#include "kernsel/kernel.hpp"
#include "kernsel/numerics.hpp"
#include "kernsel/report.hpp"
#include "kernsel/selection.hpp"
#include "kernsel/simulation.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

using namespace kernsel;

namespace {

// Opens `path` for writing, or returns stdout for "" and "-".
class Output
{
public:
  explicit Output(const std::string& path)
  {
    if (path.empty() || path == "-")
      return;
    file_.open(path);
    if (!file_)
      throw std::runtime_error("cannot write '" + path + "'");
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

private:
  std::ofstream file_;
};

std::ifstream
open_input(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot read '" + path + "'");
  return in;
}

void
write_text(const std::string& path, const std::string& text)
{
  Output out(path);
  out.stream() << text;
}

std::vector<double>
parse_number_list(const std::string& text, const char* flag)
{
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos)
        throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw std::invalid_argument(std::string(flag) + ": cannot parse '" + item + "'");
    }
  }
  return out;
}

std::vector<std::string>
split_names(const std::string& text)
{
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty())
      out.push_back(item);
  return out;
}

// -- estimate ---------------------------------------------------------------

struct EstimateOptions
{
  std::string data;
  std::string kernel;
  std::string method = "pco";
  std::string bandwidth = "auto";
  std::string target = "bf";
  double grid_min = 0.01;
  double grid_max = 1.0;
  std::size_t grid_count = 75;
  std::string quantiles = "0.02,0.98";
  std::size_t points = 100;
  std::string out;
  std::string trace;
  std::string svg;
  std::string model;
  std::string law;
  double upsilon = 1.0;
  double chi = 1.0;
  std::optional<double> clip;
};

void
write_trace(const std::string& path, const SelectionResult& r)
{
  if (path.empty())
    return;
  Output out(path);
  write_selection_csv(out.stream(), r);
}

int
run_estimate(const EstimateOptions& o)
{
  static const std::vector<std::string> methods{ "pco", "gl", "cv", "cv-nw",
                                                 "oracle", "nw" };
  static const std::vector<std::string> targets{ "f", "bf", "b", "nw" };
  if (std::find(methods.begin(), methods.end(), o.method) == methods.end())
    throw std::invalid_argument("--method: unknown value '" + o.method +
                                "' (expected pco, gl, cv, cv-nw, oracle, nw)");
  if (std::find(targets.begin(), targets.end(), o.target) == targets.end())
    throw std::invalid_argument("--target: unknown value '" + o.target +
                                "' (expected f, bf, b, nw)");

  std::optional<Bandwidth> fixed;
  if (o.bandwidth != "auto") {
    double h = 0.0;
    try {
      std::size_t used = 0;
      h = std::stod(o.bandwidth, &used);
      if (used != o.bandwidth.size())
        throw std::invalid_argument(o.bandwidth);
    } catch (const std::logic_error&) {
      throw std::invalid_argument("--bandwidth: expected a number or 'auto', got '" +
                                  o.bandwidth + "'");
    }
    if (!(h > 0.0) || !std::isfinite(h))
      throw std::invalid_argument("--bandwidth: must be positive");
    fixed = Bandwidth(h);
  }

  // "nw" as a method means a plain NW fit at the given bandwidth.
  std::string target = o.target;
  std::string method = o.method;
  if (method == "nw") {
    if (!fixed)
      throw std::invalid_argument("--method nw needs a numeric --bandwidth");
    target = "nw";
  }
  if (method == "cv-nw" && target == "b")
    target = "nw";
  if (target == "nw" && !fixed && method != "cv-nw")
    throw std::invalid_argument("--target nw selects its bandwidth with --method cv-nw");
  if (method == "cv-nw" && target != "nw")
    throw std::invalid_argument("--method cv-nw applies to --target nw or b");
  if (method == "cv" && target != "bf")
    throw std::invalid_argument("--method cv applies to --target bf only");

  const bool gaussian_method = method == "cv" || method == "cv-nw" || target == "nw";
  const auto kernel = o.kernel.empty()
                        ? (gaussian_method ? GaussianMixtureKernel::gauss()
                                           : GaussianMixtureKernel::order7())
                        : GaussianMixtureKernel::parse(o.kernel);
  if (!fixed && (method == "cv" || method == "cv-nw") &&
      !(kernel == GaussianMixtureKernel::gauss()))
    throw std::invalid_argument("--kernel: cross-validation uses the gauss kernel");

  auto in = open_input(o.data);
  Sample s = [&] {
    try {
      return read_sample_csv(in);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(o.data + ": " + e.what());
    }
  }();

  const auto q = parse_number_list(o.quantiles, "--quantiles");
  if (q.size() != 2)
    throw std::invalid_argument("--quantiles: expected two levels 'lo,hi'");
  QuantileSpec spec{ q[0], q[1], o.points };

  std::optional<ModelSpec> model;
  if (!o.model.empty() || !o.law.empty()) {
    ModelSpec m;
    if (!o.model.empty())
      m.regression = regression_fn_from_string(o.model);
    if (!o.law.empty())
      m.x_law = distribution_from_string(o.law);
    model = m;
  }
  const GridPtr grid = model && !o.law.empty() ? interquantile_grid(model->x_law, spec)
                                               : interquantile_grid(s.x(), spec);
  const auto bandwidths = BandwidthGrid::equispaced(o.grid_min, o.grid_max, o.grid_count);

  std::optional<TrueCurves> truth;
  if (model)
    truth = true_curves(*model, grid);
  if (method == "oracle" && !fixed) {
    if (!model || o.law.empty())
      throw std::invalid_argument("--method oracle needs --model and --law for the truth");
  }

  std::optional<Curve> estimate;
  std::optional<Curve> truth_curve;
  if (truth)
    truth_curve = target == "f" ? truth->f : target == "bf" ? truth->bf : truth->b;

  auto report = [](const char* what, double h) {
    std::cerr << "selected " << what << " bandwidth: " << std::setprecision(17) << h
              << std::setprecision(6) << '\n';
  };

  if (target == "f") {
    if (fixed) {
      estimate = density_curve(s, kernel, *fixed, grid);
    } else if (method == "pco" || method == "gl") {
      const auto r = method == "pco" ? pco_select_density(s, kernel, bandwidths, grid)
                                     : gl_select_density(s, kernel, bandwidths, grid, o.chi);
      write_trace(o.trace, r);
      report("density", r.selected.value());
      estimate = density_curve(s, kernel, r.selected, grid);
    } else {
      const auto fam =
        density_numerator_families(s, kernel, bandwidths.values(), grid).density;
      const auto r = oracle_select(fam, truth->f);
      write_trace(o.trace, r);
      report("density", r.selected.value());
      estimate = fam.curves[r.index];
    }
  } else if (target == "bf") {
    if (fixed) {
      estimate = numerator_curve(s, kernel, *fixed, grid);
    } else {
      SelectionResult r;
      if (method == "pco")
        r = pco_select_numerator(s, kernel, bandwidths, grid);
      else if (method == "gl")
        r = gl_select_numerator(s, kernel, bandwidths, grid, o.upsilon);
      else if (method == "cv")
        r = cv_select_numerator(s, bandwidths);
      else {
        const auto fam =
          density_numerator_families(s, kernel, bandwidths.values(), grid).numerator;
        r = oracle_select(fam, truth->bf);
      }
      write_trace(o.trace, r);
      report("numerator", r.selected.value());
      estimate = numerator_curve(s, kernel, r.selected, grid);
    }
  } else if (target == "b") {
    Bandwidth h = fixed.value_or(Bandwidth(1.0));
    Bandwidth hd = h;
    if (!fixed) {
      SelectionResult rn, rd;
      if (method == "pco") {
        rn = pco_select_numerator(s, kernel, bandwidths, grid);
        rd = pco_select_density(s, kernel, bandwidths, grid);
      } else if (method == "gl") {
        rn = gl_select_numerator(s, kernel, bandwidths, grid, o.upsilon);
        rd = gl_select_density(s, kernel, bandwidths, grid, o.chi);
      } else {
        const auto fam = density_numerator_families(s, kernel, bandwidths.values(), grid);
        rn = oracle_select(fam.numerator, truth->bf);
        rd = oracle_select(fam.density, truth->f);
      }
      write_trace(o.trace, rn);
      h = rn.selected;
      hd = rd.selected;
      report("numerator", h.value());
      report("density", hd.value());
    }
    estimate = quotient_curve(numerator_curve(s, kernel, h, grid),
                              density_curve(s, kernel, hd, grid), o.clip);
  } else {
    Bandwidth h = fixed.value_or(Bandwidth(1.0));
    if (!fixed) {
      const auto r = loo_cv_select_nw(s, bandwidths);
      write_trace(o.trace, r);
      h = r.selected;
      report("NW", h.value());
    }
    estimate = nw_curve(s, kernel, h, grid);
  }

  if (estimate->flag_count() > 0)
    std::cerr << "warning: " << estimate->flag_count()
              << " grid point(s) flagged (vanishing denominator)\n";
  if (truth_curve)
    std::cerr << "ISE: " << scored_ise(*estimate, *truth_curve) << '\n';

  {
    Output out(o.out);
    write_curve_csv(out.stream(), *estimate);
  }
  if (!o.svg.empty()) {
    std::vector<PlotSeries> series{ { *estimate, false, "estimate" } };
    if (truth_curve)
      series.push_back({ *truth_curve, true, "truth" });
    write_text(o.svg, render_svg(series, "estimate of " + target));
  }
  return 0;
}

// -- reproduce --------------------------------------------------------------

struct ReproduceOptions
{
  std::string table;
  std::optional<std::size_t> reps;
  std::uint64_t seed = 1;
  std::string models;
  std::string sizes;
  std::string out;
  std::string records;
};

int
run_reproduce(const ReproduceOptions& o)
{
  const auto& table = find_table(o.table);
  std::vector<RegressionFn> models = table.models;
  if (!o.models.empty()) {
    models.clear();
    for (const auto& name : split_names(o.models))
      models.push_back(regression_fn_from_string(name));
  }
  std::vector<std::size_t> sizes = table.sizes;
  if (!o.sizes.empty()) {
    sizes.clear();
    for (double v : parse_number_list(o.sizes, "--sizes")) {
      if (!(v >= 2.0) || v != static_cast<double>(static_cast<std::size_t>(v)))
        throw std::invalid_argument("--sizes: sample sizes must be integers >= 2");
      sizes.push_back(static_cast<std::size_t>(v));
    }
  }
  const std::size_t reps = o.reps.value_or(table.reps);
  if (reps < 1)
    throw std::invalid_argument("--reps: must be at least 1");

  std::optional<Output> records;
  if (!o.records.empty())
    records.emplace(o.records);

  std::vector<TableRow> rows;
  for (auto n : sizes)
    for (auto model : models) {
      const auto config = table_cell_config(table, model, n, reps, o.seed);
      std::cerr << table.id << ": " << to_string(model) << ", n = " << n << ", "
                << reps << " reps\n";
      const auto recs = run_replications(config);
      if (records)
        for (const auto& r : recs) {
          auto j = to_json(r);
          j["table"] = table.id;
          j["model"] = to_string(model);
          j["n"] = n;
          records->stream() << j.dump() << '\n';
        }
      const auto cell = table_rows(table, model, n, aggregate(config, recs));
      rows.insert(rows.end(), cell.begin(), cell.end());
    }
  Output out(o.out);
  write_table_csv(out.stream(), rows);
  return 0;
}

// -- experiment -------------------------------------------------------------

int
run_experiment_cmd(const std::string& config_path, const std::string& out_path,
                   const std::string& records_path, std::optional<std::size_t> reps,
                   std::optional<std::uint64_t> seed)
{
  auto in = open_input(config_path);
  ExperimentConfig config;
  try {
    config = parse_experiment_config(in);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(config_path + ": " + e.what());
  }
  if (reps)
    config.reps = *reps;
  if (seed)
    config.seed = *seed;
  config.validate();

  const auto recs = run_replications(config);
  if (!records_path.empty()) {
    Output out(records_path);
    for (const auto& r : recs)
      out.stream() << to_json(r).dump() << '\n';
  }
  Output out(out_path);
  write_report_csv(out.stream(), aggregate(config, recs));
  return 0;
}

// -- plot -------------------------------------------------------------------

int
run_plot(const std::vector<std::string>& curves, const std::string& truth,
         const std::string& out, const std::string& title)
{
  std::vector<PlotSeries> series;
  auto load = [](const std::string& path) {
    auto in = open_input(path);
    try {
      return read_curve_csv(in);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(path + ": " + e.what());
    }
  };
  for (const auto& path : curves)
    series.push_back({ load(path), false, path });
  if (!truth.empty())
    series.push_back({ load(truth), true, truth });
  if (series.empty())
    throw std::invalid_argument("plot: no curve files given");
  for (std::size_t i = 1; i < series.size(); ++i)
    if (!series[i].curve.shares_grid(series[0].curve))
      throw std::invalid_argument("plot: '" + series[i].label +
                                  "' is on a different grid than '" +
                                  series[0].label + "'");
  write_text(out, render_svg(series, title));
  return 0;
}

// -- simulate ---------------------------------------------------------------

int
run_simulate(const std::string& model_name, const std::string& law, double sigma,
             std::size_t n, std::uint64_t seed, const std::string& out)
{
  ModelSpec m{ regression_fn_from_string(model_name), distribution_from_string(law),
               sigma };
  if (!(sigma >= 0.0))
    throw std::invalid_argument("--sigma: must be nonnegative");
  if (n < 1)
    throw std::invalid_argument("--n: must be at least 1");
  Output o(out);
  write_sample_csv(o.stream(), generate_sample(m, n, seed));
  return 0;
}

} // namespace

int
main(int argc, char** argv)
{
  CLI::App app{ "kernsel: kernel estimators with data-driven bandwidths" };
  app.require_subcommand(1);

  EstimateOptions est;
  auto* estimate = app.add_subcommand("estimate", "estimate a curve from (x, y) data");
  estimate->add_option("--data", est.data, "two-column CSV file (x, y)")->required();
  estimate->add_option("--kernel", est.kernel,
                       "order7, gauss or c1:v1,c2:v2,... (default depends on method)");
  estimate->add_option("--method", est.method, "pco, gl, cv, cv-nw, oracle, nw")
    ->capture_default_str();
  estimate->add_option("--bandwidth", est.bandwidth, "positive number or 'auto'")
    ->capture_default_str();
  estimate->add_option("--target", est.target, "f, bf, b or nw")->capture_default_str();
  estimate->add_option("--grid-min", est.grid_min)->capture_default_str();
  estimate->add_option("--grid-max", est.grid_max)->capture_default_str();
  estimate->add_option("--grid-count", est.grid_count)->capture_default_str();
  estimate->add_option("--quantiles", est.quantiles, "evaluation grid levels 'lo,hi'")
    ->capture_default_str();
  estimate->add_option("--points", est.points, "evaluation grid size")
    ->capture_default_str();
  estimate->add_option("--out", est.out, "curve CSV (default stdout)");
  estimate->add_option("--trace", est.trace, "selection criterion CSV");
  estimate->add_option("--svg", est.svg, "SVG plot of the estimate");
  estimate->add_option("--model", est.model, "true regression b1..b4 (for oracle/ISE)");
  estimate->add_option("--law", est.law,
                       "law of X (std_normal or scaled_gamma): theoretical grid");
  estimate->add_option("--upsilon", est.upsilon, "GL constant for bf")
    ->capture_default_str();
  estimate->add_option("--chi", est.chi, "GL constant for f")->capture_default_str();
  estimate->add_option("--clip", est.clip, "quotient denominator clip");

  ReproduceOptions rep;
  auto* reproduce = app.add_subcommand("reproduce", "reproduce a simulation table");
  reproduce->add_option("--table", rep.table, "table id")->required();
  reproduce->add_option("--reps", rep.reps, "replications per cell");
  reproduce->add_option("--seed", rep.seed)->capture_default_str();
  reproduce->add_option("--models", rep.models, "subset, e.g. b1,b3");
  reproduce->add_option("--sizes", rep.sizes, "subset, e.g. 250,1000");
  reproduce->add_option("--out", rep.out, "table CSV (default stdout)");
  reproduce->add_option("--records", rep.records, "per-replication JSON lines");

  std::string config_path, exp_out, exp_records;
  std::optional<std::size_t> exp_reps;
  std::optional<std::uint64_t> exp_seed;
  auto* experiment = app.add_subcommand("experiment", "run an experiment config file");
  experiment->add_option("--config", config_path, "INI experiment file")->required();
  experiment->add_option("--out", exp_out, "report CSV (default stdout)");
  experiment->add_option("--records", exp_records, "per-replication JSON lines");
  experiment->add_option("--reps", exp_reps, "override replication count");
  experiment->add_option("--seed", exp_seed, "override base seed");

  std::vector<std::string> plot_curves;
  std::string plot_truth, plot_out, plot_title;
  auto* plot = app.add_subcommand("plot", "overlay curve CSV files as SVG");
  plot->add_option("curves", plot_curves, "estimated curve CSV files");
  plot->add_option("--truth", plot_truth, "true curve CSV (drawn bold red)");
  plot->add_option("--out", plot_out, "SVG file (default stdout)");
  plot->add_option("--title", plot_title);

  std::string sim_model = "b1", sim_law = "std_normal", sim_out;
  double sim_sigma = 0.1;
  std::size_t sim_n = 1000;
  std::uint64_t sim_seed = 1;
  auto* simulate = app.add_subcommand("simulate", "draw a sample from a model");
  simulate->add_option("--model", sim_model)->capture_default_str();
  simulate->add_option("--law", sim_law)->capture_default_str();
  simulate->add_option("--sigma", sim_sigma)->capture_default_str();
  simulate->add_option("--n", sim_n)->capture_default_str();
  simulate->add_option("--seed", sim_seed)->capture_default_str();
  simulate->add_option("--out", sim_out, "sample CSV (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*estimate)
      return run_estimate(est);
    if (*reproduce)
      return run_reproduce(rep);
    if (*experiment)
      return run_experiment_cmd(config_path, exp_out, exp_records, exp_reps, exp_seed);
    if (*plot)
      return run_plot(plot_curves, plot_truth, plot_out, plot_title);
    if (*simulate)
      return run_simulate(sim_model, sim_law, sim_sigma, sim_n, sim_seed, sim_out);
  } catch (const std::exception& e) {
    std::cerr << "kernsel: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
