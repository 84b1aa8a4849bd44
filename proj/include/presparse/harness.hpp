#pragma once

#include <string>
#include <vector>

#include "presparse/io.hpp"
#include "presparse/net.hpp"
#include "presparse/scatter.hpp"
#include "presparse/topology.hpp"

namespace presparse {

/// One trained sweep point. Pattern and training seeds derive from the spec
/// seed and the (point, repeat) coordinates, so rows are independent of
/// execution order and worker count. Scatter is absent when the fan counts do
/// not divide the layer sizes into integral windows; those CSV cells stay
/// empty.
struct SweepResultRow {
  std::string id;  // p<point>r<repeat>
  std::vector<Index> fan_outs;
  std::string plan;  // scatter_study only
  std::vector<double> junction_densities;
  double overall_density = 0;
  double requested_density = 0;  // percent, when the point came from a target
  bool equal_densities = false;  // junction_distribution marker
  std::optional<ScatterVector> scatter;
  double scatter_min = 0;  // NaN when scatter is absent
  std::uint64_t pattern_seed = 0;
  double best_val_accuracy = 0;
  int epochs = 0;
  double runtime_seconds = 0;  // informational; never written to CSV
};

std::vector<SweepResultRow> run_density_sweep(const SweepSpec& spec, int jobs = 0);
std::vector<SweepResultRow> run_junction_distribution(const SweepSpec& spec, int jobs = 0);
std::vector<SweepResultRow> run_scatter_study(const SweepSpec& spec, int jobs = 0);

/// Runs whichever experiment the spec names and writes its CSV (plus the
/// median summary CSV next to it).
std::vector<SweepResultRow> run_sweep(const SweepSpec& spec, int jobs = 0);

/// Resolves a requested overall density (percent) to the feasible fan-out
/// tuple whose achieved density is closest, breaking ties toward balanced
/// junction densities. Two-junction topologies only.
std::vector<Index> resolve_density_target(const std::vector<Index>& layer_sizes, double percent);

void write_sweep_csv(const SweepSpec& spec, const std::vector<SweepResultRow>& rows,
                     const std::string& path);
void write_median_csv(const SweepSpec& spec, const std::vector<SweepResultRow>& rows,
                      const std::string& path);

/// Median of an unordered list; midpoint average for even sizes.
double median(std::vector<double> values);

/// The path the median summary is written to: "<stem>_median<ext>".
std::string median_path(const std::string& csv_path);

int cli_dispatch(int argc, char** argv);

}  // namespace presparse
