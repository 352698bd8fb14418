#pragma once

#include "kernsel/estimators.hpp"
#include "kernsel/numerics.hpp"
#include "kernsel/simulation.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace kernsel {

//! A reproducible results table: one experiment per (model, sample size).
struct TablePreset
{
  std::string id;
  std::string caption;
  Target target = Target::bf;
  Distribution x_law = Distribution::std_normal;
  double sigma = 0.1;
  std::vector<Method> methods;
  //! Method labels reported, in column order.
  std::vector<std::string> columns;
  std::vector<RegressionFn> models{ RegressionFn::b1, RegressionFn::b2,
                                    RegressionFn::b3, RegressionFn::b4 };
  std::vector<std::size_t> sizes{ 250, 500, 1000 };
  std::size_t reps = 200;
};

const std::vector<TablePreset>& table_presets();
//! Throws std::invalid_argument for an unknown id.
const TablePreset& find_table(const std::string& id);

//! Configuration of one table cell. Each cell gets its own seed derived from
//! the base seed, the model and the sample size.
ExperimentConfig table_cell_config(const TablePreset& table, RegressionFn model,
                                   std::size_t n, std::size_t reps,
                                   std::uint64_t seed);

struct TableRow
{
  std::string model;
  std::size_t n = 0;
  std::string method;
  double mise_x100 = 0.0;
  double std_x100 = 0.0;
  double mean_bandwidth = 0.0;
  double std_bandwidth = 0.0;

  friend bool operator==(const TableRow&, const TableRow&) = default;
};

std::vector<TableRow> table_rows(const TablePreset& table, RegressionFn model,
                                 std::size_t n, const MISEReport& report);

//! Header: model,n,method,mise_x100,std_x100,mean_bandwidth,std_bandwidth.
//! Numbers use the shortest round-trip representation.
void write_table_csv(std::ostream& os, const std::vector<TableRow>& rows);
std::vector<TableRow> read_table_csv(std::istream& is);

//! Full experiment report: target,method,reps,mise_x100,std_x100,
//! mean_bandwidth,std_bandwidth,mean_density_bandwidth,flagged.
void write_report_csv(std::ostream& os, const MISEReport& report);

//! Header: x,value,flagged.
void write_curve_csv(std::ostream& os, const Curve& c);
//! Reads a curve written by write_curve_csv; the grid is rebuilt from x.
Curve read_curve_csv(std::istream& is);

//! Two numeric columns (x, y), optional header line. Throws
//! std::invalid_argument naming the offending line; an input without data
//! rows fails with "no observations".
Sample read_sample_csv(std::istream& is);
void write_sample_csv(std::ostream& os, const Sample& s);

struct PlotSeries
{
  Curve curve;
  bool emphasized = false;
  std::string label;
};

//! Static SVG overlay: one polyline per series, emphasized series bold red,
//! others thin. All series must share a grid.
std::string render_svg(const std::vector<PlotSeries>& series,
                       const std::string& title = {});

} // namespace kernsel
