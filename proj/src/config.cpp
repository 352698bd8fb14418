#include "kernsel/simulation.hpp"

#include <sstream>
#include <stdexcept>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace kernsel {

namespace {

std::vector<std::string>
split_list(const std::string& text)
{
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto a = item.find_first_not_of(" \t");
    const auto b = item.find_last_not_of(" \t");
    if (a != std::string::npos)
      out.push_back(item.substr(a, b - a + 1));
  }
  return out;
}

//! Value at path, or fallback when absent; unparsable values throw.
template<class T>
T
lookup(const boost::property_tree::ptree& tree, const char* path, T fallback)
{
  if (auto child = tree.get_child_optional(path))
    return child->get_value<T>();
  return fallback;
}

} // namespace

ExperimentConfig
parse_experiment_config(std::istream& in)
{
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw std::invalid_argument("config: " + std::string(e.what()));
  }

  ExperimentConfig c;
  try {
    if (auto v = tree.get_optional<std::string>("model.regression"))
      c.model.regression = regression_fn_from_string(*v);
    if (auto v = tree.get_optional<std::string>("model.law"))
      c.model.x_law = distribution_from_string(*v);
    c.model.sigma = lookup(tree, "model.sigma", c.model.sigma);

    c.n = lookup(tree, "experiment.n", c.n);
    c.reps = lookup(tree, "experiment.reps", c.reps);
    c.seed = lookup(tree, "experiment.seed", c.seed);
    if (auto v = tree.get_optional<std::string>("experiment.methods")) {
      c.methods.clear();
      for (const auto& m : split_list(*v))
        c.methods.push_back(method_from_string(m));
    }
    if (auto v = tree.get_optional<std::string>("experiment.targets")) {
      c.targets.clear();
      for (const auto& t : split_list(*v))
        c.targets.push_back(target_from_string(t));
    }

    const double hmin = lookup(tree, "bandwidths.min", 0.01);
    const double hmax = lookup(tree, "bandwidths.max", 1.0);
    const auto hcount = lookup<std::size_t>(tree, "bandwidths.count", 75);
    c.bandwidths = BandwidthGrid::equispaced(hmin, hmax, hcount);

    c.quantiles.p_lo = lookup(tree, "grid.p_lo", c.quantiles.p_lo);
    c.quantiles.p_hi = lookup(tree, "grid.p_hi", c.quantiles.p_hi);
    c.quantiles.points = lookup(tree, "grid.points", c.quantiles.points);
    c.empirical_grid = lookup(tree, "grid.empirical", c.empirical_grid);

    if (auto v = tree.get_optional<std::string>("kernel.spec"))
      c.kernel = GaussianMixtureKernel::parse(*v);

    c.upsilon = lookup(tree, "gl.upsilon", c.upsilon);
    c.chi = lookup(tree, "gl.chi", c.chi);
    c.pco_numerator_multiplier =
      lookup(tree, "pco.numerator_multiplier", c.pco_numerator_multiplier);
    c.pco_density_multiplier =
      lookup(tree, "pco.density_multiplier", c.pco_density_multiplier);
    if (tree.get_child_optional("quotient.clip"))
      c.quotient_clip = lookup(tree, "quotient.clip", 0.0);
  } catch (const pt::ptree_bad_data& e) {
    throw std::invalid_argument("config: bad value: " + std::string(e.what()));
  }
  c.validate();
  return c;
}

} // namespace kernsel
