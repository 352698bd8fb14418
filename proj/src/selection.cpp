#include "kernsel/selection.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace kernsel {

namespace {

constexpr double inv_sqrt_2pi = 0.3989422804014327;
constexpr double exp_underflow = 746.0;

SelectionResult
finish(std::vector<double> bandwidths, std::vector<double> criterion)
{
  SelectionResult r;
  r.index = argmin_first(criterion);
  r.selected = Bandwidth(bandwidths[r.index]);
  r.bandwidths = std::move(bandwidths);
  r.criterion = std::move(criterion);
  return r;
}

void
require_reference(const CurveFamily& family)
{
  if (family.size() == 0)
    throw std::invalid_argument("selection needs at least one bandwidth");
  if (family.bandwidths.size() != family.curves.size())
    throw std::invalid_argument("curve family has mismatched bandwidth list");
}

// d^2 sorted rows for pairwise criteria
struct SortedPairs
{
  std::vector<double> x;
  std::vector<double> y;
};

SortedPairs
sort_rows(const Sample& s)
{
  std::vector<std::size_t> idx(s.size());
  std::iota(idx.begin(), idx.end(), std::size_t{ 0 });
  std::stable_sort(idx.begin(), idx.end(),
                   [&](auto a, auto b) { return s.x()[a] < s.x()[b]; });
  SortedPairs p;
  for (auto i : idx) {
    p.x.push_back(s.x()[i]);
    p.y.push_back(s.y()[i]);
  }
  return p;
}

void
append_number(std::string& out, double v)
{
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

} // namespace

BandwidthGrid::BandwidthGrid(std::vector<double> values)
  : values_(std::move(values))
{
  if (values_.empty())
    throw std::invalid_argument("bandwidth grid is empty");
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (!(values_[k] > 0.0) || !std::isfinite(values_[k]))
      throw std::invalid_argument("bandwidths must be positive and finite");
    if (k > 0 && !(values_[k] > values_[k - 1]))
      throw std::invalid_argument("bandwidths must be strictly increasing");
  }
}

BandwidthGrid
BandwidthGrid::equispaced(double lo, double hi, std::size_t count)
{
  if (count == 0)
    throw std::invalid_argument("bandwidth grid needs at least one value");
  if (count == 1)
    return BandwidthGrid({ lo });
  if (!(lo < hi))
    throw std::invalid_argument("bandwidth grid needs min < max");
  std::vector<double> v(count);
  const double step = (hi - lo) / static_cast<double>(count - 1);
  for (std::size_t k = 0; k < count; ++k)
    v[k] = lo + step * static_cast<double>(k);
  v.back() = hi;
  return BandwidthGrid(std::move(v));
}

const std::vector<double>&
SelectionResult::trace(std::string_view name) const
{
  for (const auto& [key, values] : diagnostics)
    if (key == name)
      return values;
  throw std::out_of_range("no diagnostic trace named '" + std::string(name) + "'");
}

std::size_t
argmin_first(std::span<const double> criterion)
{
  std::size_t best = 0;
  double best_val = std::numeric_limits<double>::infinity();
  bool found = false;
  for (std::size_t k = 0; k < criterion.size(); ++k) {
    const double v = criterion[k];
    if (std::isnan(v))
      continue;
    if (!found || v < best_val) {
      best = k;
      best_val = v;
      found = true;
    }
  }
  return best;
}

void
write_selection_csv(std::ostream& os, const SelectionResult& r)
{
  std::string line = "bandwidth,criterion";
  for (const auto& d : r.diagnostics)
    line += "," + d.first;
  os << line << '\n';
  for (std::size_t k = 0; k < r.bandwidths.size(); ++k) {
    line.clear();
    append_number(line, r.bandwidths[k]);
    line += ',';
    append_number(line, r.criterion[k]);
    for (const auto& d : r.diagnostics) {
      line += ',';
      append_number(line, d.second[k]);
    }
    os << line << '\n';
  }
}

SelectionResult
pco_select_numerator(const CurveFamily& numerator, const Sample& s,
                     const GaussianMixtureKernel& k, double penalty_multiplier)
{
  require_reference(numerator);
  const double n = static_cast<double>(s.size());
  const double sum_y2 = s.mean_y_sq() * n;
  const Bandwidth h_min(numerator.bandwidths.front());
  const Curve& reference = numerator.curves.front();

  std::vector<double> distance, penalty, crit;
  for (std::size_t j = 0; j < numerator.size(); ++j) {
    const double d = j == 0 ? 0.0 : riemann_l2_dist_sq(numerator.curves[j], reference);
    const double p = 2.0 * k.pair_inner_product(h_min, Bandwidth(numerator.bandwidths[j])) /
                     (n * n) * sum_y2;
    distance.push_back(d);
    penalty.push_back(p);
    crit.push_back(d + penalty_multiplier * p);
  }
  auto r = finish(numerator.bandwidths, std::move(crit));
  r.diagnostics.emplace_back("distance", std::move(distance));
  r.diagnostics.emplace_back("penalty", std::move(penalty));
  return r;
}

SelectionResult
pco_select_numerator(const Sample& s, const GaussianMixtureKernel& k,
                     const BandwidthGrid& bandwidths, const GridPtr& grid,
                     double penalty_multiplier)
{
  auto fam = density_numerator_families(s, k, bandwidths.values(), grid);
  return pco_select_numerator(fam.numerator, s, k, penalty_multiplier);
}

SelectionResult
pco_select_density(const CurveFamily& density, std::size_t n,
                   const GaussianMixtureKernel& k, double penalty_multiplier)
{
  require_reference(density);
  if (n == 0)
    throw std::invalid_argument("pco_select_density: n must be positive");
  const double nd = static_cast<double>(n);
  const Bandwidth h_min(density.bandwidths.front());
  const Curve& reference = density.curves.front();

  std::vector<double> distance, penalty, crit;
  for (std::size_t j = 0; j < density.size(); ++j) {
    const double d = j == 0 ? 0.0 : riemann_l2_dist_sq(density.curves[j], reference);
    const double p =
      2.0 * k.pair_inner_product(h_min, Bandwidth(density.bandwidths[j])) / nd;
    distance.push_back(d);
    penalty.push_back(p);
    crit.push_back(d + penalty_multiplier * p);
  }
  auto r = finish(density.bandwidths, std::move(crit));
  r.diagnostics.emplace_back("distance", std::move(distance));
  r.diagnostics.emplace_back("penalty", std::move(penalty));
  return r;
}

SelectionResult
pco_select_density(const Sample& s, const GaussianMixtureKernel& k,
                   const BandwidthGrid& bandwidths, const GridPtr& grid,
                   double penalty_multiplier)
{
  auto fam = density_numerator_families(s, k, bandwidths.values(), grid);
  return pco_select_density(fam.density, s.size(), k, penalty_multiplier);
}

namespace {

// Shared GL machinery: `base` holds the plain estimates, `smoothed(a, b)`
// the doubly smoothed estimate for bandwidth pair (h_a, eta_b), which is
// symmetric in its arguments.
template <class Smoothed>
SelectionResult
gl_select(const BandwidthGrid& bandwidths, const std::vector<Curve>& base,
          std::vector<double> variance, Smoothed&& smoothed)
{
  const auto m = bandwidths.size();
  std::vector<double> dist(m * m, 0.0);
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a; b < m; ++b) {
      const Curve c = smoothed(a, b);
      dist[a * m + b] = riemann_l2_dist_sq(c, base[b]);
      if (b != a)
        dist[b * m + a] = riemann_l2_dist_sq(c, base[a]);
    }
  }

  std::vector<double> a_trace(m, 0.0), dmax(m, 0.0), crit(m);
  for (std::size_t a = 0; a < m; ++a) {
    double sup = 0.0;
    double dm = 0.0;
    for (std::size_t b = 0; b < m; ++b) {
      dm = std::max(dm, dist[a * m + b]);
      sup = std::max(sup, dist[a * m + b] - variance[b]);
    }
    a_trace[a] = sup;
    dmax[a] = dm;
    crit[a] = a_trace[a] + variance[a];
  }

  std::vector<double> hs(bandwidths.values().begin(), bandwidths.values().end());
  auto r = finish(std::move(hs), std::move(crit));
  r.diagnostics.emplace_back("A", std::move(a_trace));
  r.diagnostics.emplace_back("V", std::move(variance));
  r.diagnostics.emplace_back("distance_max", std::move(dmax));
  return r;
}

} // namespace

SelectionResult
gl_select_numerator(const Sample& s, const GaussianMixtureKernel& k,
                    const BandwidthGrid& bandwidths, const GridPtr& grid,
                    double upsilon)
{
  if (!(upsilon > 0.0))
    throw std::invalid_argument("GL constant upsilon must be positive");
  auto fam = density_numerator_families(s, k, bandwidths.values(), grid);
  const double n = static_cast<double>(s.size());
  const double l1 = k.l1_norm();
  const double c_ky = k.l2_norm_sq() * s.mean_y_sq();

  std::vector<double> variance;
  for (double h : bandwidths.values())
    variance.push_back(upsilon * c_ky / (n * h) * l1 * l1);

  const auto hs = bandwidths.values();
  return gl_select(bandwidths, fam.numerator.curves, std::move(variance),
                   [&](std::size_t a, std::size_t b) {
                     return convolved_numerator_curve(s, k, Bandwidth(hs[a]),
                                                      Bandwidth(hs[b]), grid);
                   });
}

SelectionResult
gl_select_density(const Sample& s, const GaussianMixtureKernel& k,
                  const BandwidthGrid& bandwidths, const GridPtr& grid,
                  double chi)
{
  if (!(chi > 0.0))
    throw std::invalid_argument("GL constant chi must be positive");
  auto fam = density_numerator_families(s, k, bandwidths.values(), grid);
  const double n = static_cast<double>(s.size());
  const double l1 = k.l1_norm();

  std::vector<double> variance;
  for (double h : bandwidths.values())
    variance.push_back(chi * k.l2_norm_sq() * l1 * l1 / (n * h));

  const auto hs = bandwidths.values();
  return gl_select(bandwidths, fam.density.curves, std::move(variance),
                   [&](std::size_t a, std::size_t b) {
                     return convolved_density_curve(s, k, Bandwidth(hs[a]),
                                                    Bandwidth(hs[b]), grid);
                   });
}

SelectionResult
cv_select_numerator(const Sample& s, const BandwidthGrid& bandwidths)
{
  const auto n = s.size();
  if (n < 2)
    throw std::invalid_argument("cross-validation needs n >= 2");
  const auto rows = sort_rows(s);
  const double nd = static_cast<double>(n);
  double sum_y2 = 0.0;
  for (double v : rows.y)
    sum_y2 += v * v;

  std::vector<double> integral, cross, crit;
  for (double h : bandwidths.values()) {
    const double h2 = h * h;
    // exp(-d^2 / (4 h^2)) vanishes beyond this distance
    const double radius = std::sqrt(4.0 * h2 * exp_underflow);
    double pair_wide = 0.0;   // sum_{i<j} Y_i Y_j exp(-d^2 / (4h^2))
    double pair_narrow = 0.0; // sum_{i<j} Y_i Y_j exp(-d^2 / (2h^2))
    for (std::size_t i = 0; i + 1 < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double d = rows.x[j] - rows.x[i];
        if (d > radius)
          break;
        const double e = std::exp(-d * d / (4.0 * h2));
        const double yy = rows.y[i] * rows.y[j];
        pair_wide += yy * e;
        pair_narrow += yy * e * e;
      }
    }
    const double norm_wide = inv_sqrt_2pi / std::sqrt(2.0 * h2);
    const double norm_narrow = inv_sqrt_2pi / h;
    const double in = (sum_y2 + 2.0 * pair_wide) * norm_wide / (nd * nd);
    const double cr = 2.0 / (nd * (nd - 1.0)) * 2.0 * pair_narrow * norm_narrow;
    integral.push_back(in);
    cross.push_back(cr);
    crit.push_back(in - cr);
  }
  std::vector<double> hs(bandwidths.values().begin(), bandwidths.values().end());
  auto r = finish(std::move(hs), std::move(crit));
  r.diagnostics.emplace_back("integral", std::move(integral));
  r.diagnostics.emplace_back("cross", std::move(cross));
  return r;
}

SelectionResult
loo_cv_select_nw(const Sample& s, const BandwidthGrid& bandwidths)
{
  const auto n = s.size();
  if (n < 2)
    throw std::invalid_argument("leave-one-out cross-validation needs n >= 2");
  const auto rows = sort_rows(s);
  const Sample sorted(rows.x, rows.y);
  const auto gauss = GaussianMixtureKernel::gauss();

  std::vector<double> crit, degenerate;
  std::vector<double> num(n), den(n);
  for (double h : bandwidths.values()) {
    const double rate = -0.5 / (h * h);
    const double radius = std::sqrt(2.0 * h * h * exp_underflow);
    std::fill(num.begin(), num.end(), 0.0);
    std::fill(den.begin(), den.end(), 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double d = rows.x[j] - rows.x[i];
        if (d > radius)
          break;
        const double w = std::exp(rate * d * d);
        num[i] += w * rows.y[j];
        den[i] += w;
        num[j] += w * rows.y[i];
        den[j] += w;
      }
    }
    double total = 0.0;
    double bad = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::optional<double> pred;
      if (den[i] > 0.0)
        pred = num[i] / den[i];
      else
        pred = loo_nw_predict(sorted, gauss, Bandwidth(h), i);
      double r = rows.y[i];
      if (pred && std::isfinite(*pred))
        r -= *pred;
      else
        bad += 1.0;
      total += r * r;
    }
    crit.push_back(total);
    degenerate.push_back(bad);
  }
  std::vector<double> hs(bandwidths.values().begin(), bandwidths.values().end());
  auto r = finish(std::move(hs), std::move(crit));
  r.diagnostics.emplace_back("degenerate", std::move(degenerate));
  return r;
}

double
scored_ise(const Curve& estimate, const Curve& truth)
{
  require_same_grid(estimate, truth, "scored_ise");
  double s = 0.0;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const double e = std::isfinite(estimate[k]) ? estimate[k] : 0.0;
    const double d = e - truth[k];
    s += d * d;
  }
  return truth.grid().step() * s;
}

SelectionResult
oracle_select(const CurveFamily& family, const Curve& truth)
{
  if (family.size() == 0)
    throw std::invalid_argument("oracle_select: empty curve family");
  require_reference(family);
  std::vector<double> ise;
  for (const auto& c : family.curves)
    ise.push_back(scored_ise(c, truth));
  return finish(family.bandwidths, std::move(ise));
}

} // namespace kernsel
