#include "kernsel/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace kernsel {

namespace {

std::string
num(double v)
{
  if (std::isnan(v))
    return "nan";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string
xml_escape(const std::string& s)
{
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

std::string
trim(const std::string& s)
{
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos)
    return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string>
split_csv(const std::string& line)
{
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ','))
    out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',')
    out.emplace_back();
  return out;
}

bool
parse_double(const std::string& text, double& out)
{
  if (text == "nan") {
    out = std::numeric_limits<double>::quiet_NaN();
    return true;
  }
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+')
    ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && first != last;
}

double
require_double(const std::string& text, std::size_t line, const char* what)
{
  double v = 0.0;
  if (!parse_double(text, v))
    throw std::invalid_argument("line " + std::to_string(line) + ": cannot parse " +
                                what + " '" + text + "'");
  return v;
}

std::uint64_t
cell_seed(std::uint64_t seed, RegressionFn model, std::size_t n)
{
  return replication_seed(seed ^ (static_cast<std::uint64_t>(model) << 32),
                          n + 1000003);
}

TablePreset
preset(std::string id, std::string caption, Target target, Distribution law,
       double sigma, std::vector<Method> methods, std::vector<std::string> columns)
{
  TablePreset t;
  t.id = std::move(id);
  t.caption = std::move(caption);
  t.target = target;
  t.x_law = law;
  t.sigma = sigma;
  t.methods = std::move(methods);
  t.columns = std::move(columns);
  return t;
}

} // namespace

const std::vector<TablePreset>&
table_presets()
{
  using enum Method;
  const auto N = Distribution::std_normal;
  const auto G = Distribution::scaled_gamma;
  static const std::vector<TablePreset> tables{
    preset("bf_gauss_01", "100*MISE for bf, X ~ N(0,1), sigma = 0.1", Target::bf, N,
           0.1, { pco, cv_bf, oracle }, { "PCO", "CV", "Or" }),
    preset("bf_gauss_07", "100*MISE for bf, X ~ N(0,1), sigma = 0.7", Target::bf, N,
           0.7, { pco, cv_bf, oracle }, { "PCO", "CV", "Or" }),
    preset("bf_bw_gauss_01", "selected bandwidths for bf, X ~ N(0,1), sigma = 0.1",
           Target::bf, N, 0.1, { pco, cv_bf, oracle }, { "PCO", "CV", "Or" }),
    preset("b_gauss_01", "100*MISE for b, X ~ N(0,1), sigma = 0.1", Target::b, N,
           0.1, { cv_nw, pco, oracle }, { "CV", "PCO", "Or" }),
    preset("b_nw_bw_01", "CV-selected NW bandwidths, X ~ N(0,1), sigma = 0.1",
           Target::b, N, 0.1, { cv_nw }, { "CV" }),
    preset("b_gauss_07", "100*MISE for b, X ~ N(0,1), sigma = 0.7", Target::b, N,
           0.7, { cv_nw, pco, oracle }, { "CV", "PCO", "Or" }),
    preset("nw_bw_07", "CV-selected NW bandwidths, X ~ N(0,1), sigma = 0.7",
           Target::b, N, 0.7, { cv_nw }, { "CV" }),
    preset("bf_gamma_01", "100*MISE for bf, X ~ Gamma(3,2)/5, sigma = 0.1",
           Target::bf, G, 0.1, { pco, cv_bf, oracle }, { "PCO", "CV", "Or" }),
    preset("bf_gamma_07", "100*MISE for bf, X ~ Gamma(3,2)/5, sigma = 0.7",
           Target::bf, G, 0.7, { pco, cv_bf, oracle }, { "PCO", "CV", "Or" }),
    preset("b_gamma_01", "100*MISE for b, X ~ Gamma(3,2)/5, sigma = 0.1", Target::b,
           G, 0.1, { cv_nw, pco, oracle }, { "CV", "PCO", "Or" }),
    preset("b_gamma_07", "100*MISE for b, X ~ Gamma(3,2)/5, sigma = 0.7", Target::b,
           G, 0.7, { cv_nw, pco, oracle }, { "CV", "PCO", "Or" }),
  };
  return tables;
}

const TablePreset&
find_table(const std::string& id)
{
  for (const auto& t : table_presets())
    if (t.id == id)
      return t;
  std::string known;
  for (const auto& t : table_presets())
    known += (known.empty() ? "" : ", ") + t.id;
  throw std::invalid_argument("unknown table id '" + id + "' (known: " + known + ")");
}

ExperimentConfig
table_cell_config(const TablePreset& table, RegressionFn model, std::size_t n,
                  std::size_t reps, std::uint64_t seed)
{
  ExperimentConfig c;
  c.model = { model, table.x_law, table.sigma };
  c.n = n;
  c.reps = reps;
  c.seed = cell_seed(seed, model, n);
  c.methods = table.methods;
  c.targets = { table.target };
  c.validate();
  return c;
}

std::vector<TableRow>
table_rows(const TablePreset& table, RegressionFn model, std::size_t n,
           const MISEReport& report)
{
  std::vector<TableRow> rows;
  for (const auto& col : table.columns) {
    const auto& r = report.row(table.target, col);
    rows.push_back({ to_string(model), n, col, r.mise_x100, r.std_x100,
                     r.mean_bandwidth, r.std_bandwidth });
  }
  return rows;
}

void
write_table_csv(std::ostream& os, const std::vector<TableRow>& rows)
{
  os << "model,n,method,mise_x100,std_x100,mean_bandwidth,std_bandwidth\n";
  for (const auto& r : rows)
    os << r.model << ',' << r.n << ',' << r.method << ',' << num(r.mise_x100) << ','
       << num(r.std_x100) << ',' << num(r.mean_bandwidth) << ','
       << num(r.std_bandwidth) << '\n';
}

std::vector<TableRow>
read_table_csv(std::istream& is)
{
  std::vector<TableRow> rows;
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(is, line))
    throw std::invalid_argument("table csv: missing header");
  ++lineno;
  if (trim(line) != "model,n,method,mise_x100,std_x100,mean_bandwidth,std_bandwidth")
    throw std::invalid_argument("table csv: unexpected header '" + line + "'");
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty())
      continue;
    const auto cells = split_csv(line);
    if (cells.size() != 7)
      throw std::invalid_argument("line " + std::to_string(lineno) +
                                  ": expected 7 columns");
    TableRow r;
    r.model = cells[0];
    r.n = static_cast<std::size_t>(require_double(cells[1], lineno, "n"));
    r.method = cells[2];
    r.mise_x100 = require_double(cells[3], lineno, "mise_x100");
    r.std_x100 = require_double(cells[4], lineno, "std_x100");
    r.mean_bandwidth = require_double(cells[5], lineno, "mean_bandwidth");
    r.std_bandwidth = require_double(cells[6], lineno, "std_bandwidth");
    rows.push_back(std::move(r));
  }
  return rows;
}

void
write_report_csv(std::ostream& os, const MISEReport& report)
{
  os << "target,method,reps,mise_x100,std_x100,mean_bandwidth,std_bandwidth,"
        "mean_density_bandwidth,flagged\n";
  for (const auto& r : report.rows)
    os << to_string(r.target) << ',' << r.method << ',' << r.reps << ','
       << num(r.mise_x100) << ',' << num(r.std_x100) << ',' << num(r.mean_bandwidth)
       << ',' << num(r.std_bandwidth) << ',' << num(r.mean_density_bandwidth) << ','
       << r.flagged << '\n';
}

void
write_curve_csv(std::ostream& os, const Curve& c)
{
  os << "x,value,flagged\n";
  for (std::size_t k = 0; k < c.size(); ++k)
    os << num(c.grid()[k]) << ',' << num(c[k]) << ',' << (c.flagged(k) ? 1 : 0)
       << '\n';
}

Curve
read_curve_csv(std::istream& is)
{
  std::string line;
  std::size_t lineno = 0;
  std::vector<double> xs, vs;
  std::vector<bool> flags;
  while (std::getline(is, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty())
      continue;
    const auto cells = split_csv(t);
    if (lineno == 1 && !cells.empty() && cells[0] == "x")
      continue;
    if (cells.size() < 2 || cells.size() > 3)
      throw std::invalid_argument("line " + std::to_string(lineno) +
                                  ": expected x,value[,flagged]");
    xs.push_back(require_double(cells[0], lineno, "x"));
    vs.push_back(require_double(cells[1], lineno, "value"));
    flags.push_back(cells.size() == 3 && cells[2] == "1");
  }
  auto grid = std::make_shared<const Grid>(Grid::from_points(std::move(xs)));
  return Curve(std::move(grid), std::move(vs), std::move(flags));
}

Sample
read_sample_csv(std::istream& is)
{
  std::string line;
  std::size_t lineno = 0;
  std::vector<double> xs, ys;
  bool seen_row = false;
  while (std::getline(is, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#')
      continue;
    const auto cells = split_csv(t);
    double x = 0.0, y = 0.0;
    const bool numeric =
      cells.size() == 2 && parse_double(cells[0], x) && parse_double(cells[1], y);
    if (!numeric) {
      if (!seen_row && xs.empty() && cells.size() == 2) {
        seen_row = true; // header
        continue;
      }
      throw std::invalid_argument("line " + std::to_string(lineno) +
                                  ": expected two numeric columns, got '" + t + "'");
    }
    if (!std::isfinite(x) || !std::isfinite(y))
      throw std::invalid_argument("line " + std::to_string(lineno) +
                                  ": non-finite value");
    seen_row = true;
    xs.push_back(x);
    ys.push_back(y);
  }
  if (xs.empty())
    throw std::invalid_argument("no observations");
  return Sample(std::move(xs), std::move(ys));
}

void
write_sample_csv(std::ostream& os, const Sample& s)
{
  os << "x,y\n";
  for (std::size_t i = 0; i < s.size(); ++i)
    os << num(s.x()[i]) << ',' << num(s.y()[i]) << '\n';
}

std::string
render_svg(const std::vector<PlotSeries>& series, const std::string& title)
{
  if (series.empty())
    throw std::invalid_argument("plot needs at least one curve");
  for (const auto& s : series)
    require_same_grid(series.front().curve, s.curve, "plot");

  const auto& grid = series.front().curve.grid();
  double ymin = std::numeric_limits<double>::infinity();
  double ymax = -ymin;
  for (const auto& s : series)
    for (double v : s.curve.values())
      if (std::isfinite(v)) {
        ymin = std::min(ymin, v);
        ymax = std::max(ymax, v);
      }
  if (!std::isfinite(ymin)) {
    ymin = -1.0;
    ymax = 1.0;
  }
  if (ymax - ymin < 1e-12) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  const double pad = 0.05 * (ymax - ymin);
  ymin -= pad;
  ymax += pad;

  constexpr double width = 800, height = 500, left = 60, right = 20, top = 40,
                   bottom = 50;
  const double xmin = grid.front(), xmax = grid.back();
  auto px = [&](double x) {
    return left + (x - xmin) / (xmax - xmin) * (width - left - right);
  };
  auto py = [&](double y) {
    return height - bottom - (y - ymin) / (ymax - ymin) * (height - top - bottom);
  };

  std::ostringstream os;
  os.precision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
     << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << ' ' << height
     << "\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
     << "\" fill=\"white\"/>\n";
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\""
     << width - left - right << "\" height=\"" << height - top - bottom
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  if (!title.empty())
    os << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
       << "font-family=\"sans-serif\" font-size=\"16\">" << xml_escape(title) << "</text>\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = xmin + (xmax - xmin) * t / 4.0;
    const double yv = ymin + (ymax - ymin) * t / 4.0;
    os << "<text x=\"" << px(xv) << "\" y=\"" << height - bottom + 18
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
       << num(std::round(xv * 1000) / 1000) << "</text>\n";
    os << "<text x=\"" << left - 6 << "\" y=\"" << py(yv) + 4
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
       << num(std::round(yv * 1000) / 1000) << "</text>\n";
  }

  // thin series first so the emphasized ones stay on top
  std::vector<const PlotSeries*> order;
  for (const auto& s : series)
    if (!s.emphasized)
      order.push_back(&s);
  for (const auto& s : series)
    if (s.emphasized)
      order.push_back(&s);

  for (const auto* s : order) {
    os << "<polyline fill=\"none\" ";
    if (s->emphasized)
      os << "stroke=\"#cc0000\" stroke-width=\"3\"";
    else
      os << "stroke=\"#2a8a2a\" stroke-width=\"1\" stroke-dasharray=\"3,2\" "
            "stroke-opacity=\"0.8\"";
    os << " points=\"";
    for (std::size_t k = 0; k < s->curve.size(); ++k) {
      const double v = s->curve[k];
      if (!std::isfinite(v))
        continue;
      os << px(grid[k]) << ',' << py(std::clamp(v, ymin, ymax)) << ' ';
    }
    os << "\">";
    if (!s->label.empty())
      os << "<title>" << xml_escape(s->label) << "</title>";
    os << "</polyline>\n";
  }
  os << "</svg>\n";
  return os.str();
}

} // namespace kernsel
