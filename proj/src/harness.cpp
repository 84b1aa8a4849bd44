#include "presparse/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <thread>

#include "presparse/rng.hpp"

namespace presparse {

double median(std::vector<double> values) {
  if (values.empty()) raise(ErrorCode::EmptyDataset, "median of nothing");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return 0.5 * (values[mid - 1] + values[mid]);
}

std::string median_path(const std::string& csv_path) {
  const auto dot = csv_path.rfind('.');
  if (dot == std::string::npos || csv_path.find('/', dot) != std::string::npos) {
    return csv_path + "_median";
  }
  return csv_path.substr(0, dot) + "_median" + csv_path.substr(dot);
}

std::vector<Index> resolve_density_target(const std::vector<Index>& layer_sizes, double percent) {
  if (layer_sizes.size() != 3) {
    raise(ErrorCode::BadFormat, "density targets need explicit fan_outs unless J == 2");
  }
  std::vector<Index> best;
  double best_error = 0;
  double best_imbalance = 0;
  for (Index fo1 = 1; fo1 <= layer_sizes[1]; ++fo1) {
    if (static_cast<std::int64_t>(layer_sizes[0]) * fo1 % layer_sizes[1] != 0) continue;
    for (Index fo2 = 1; fo2 <= layer_sizes[2]; ++fo2) {
      if (static_cast<std::int64_t>(layer_sizes[1]) * fo2 % layer_sizes[2] != 0) continue;
      const JunctionSpec a = derive_junction_spec(layer_sizes[0], layer_sizes[1], fo1);
      const JunctionSpec b = derive_junction_spec(layer_sizes[1], layer_sizes[2], fo2);
      const double achieved = overall_cl_density({a, b}) * 100.0;
      const double error = std::abs(achieved - percent);
      const double imbalance = std::abs(junction_density(a) - junction_density(b));
      if (best.empty() || error < best_error - 1e-12 ||
          (error < best_error + 1e-12 && imbalance < best_imbalance - 1e-12)) {
        best = {fo1, fo2};
        best_error = error;
        best_imbalance = imbalance;
      }
    }
  }
  return best;
}

namespace {

struct SweepPoint {
  std::vector<Index> fan_outs;
  std::string plan;  // empty = random pattern
  double requested_density = 0;
};

NetworkTopology point_topology(const SweepSpec& spec, const SweepPoint& point) {
  return make_topology(spec.layer_sizes, point.fan_outs);
}

// Trains one (point, repeat) cell; everything random derives from the spec
// seed with the cell coordinates.
SweepResultRow run_cell(const SweepSpec& spec, const Dataset& dataset, const SweepPoint& point,
                        std::size_t point_index, int repeat) {
  const auto start = std::chrono::steady_clock::now();
  const NetworkTopology topology = point_topology(spec, point);
  const std::uint64_t cell_stream =
      derive_stream(spec.train.seed, point_index * 1000003ULL + static_cast<std::uint64_t>(repeat));

  SweepResultRow row;
  row.id = "p" + std::to_string(point_index) + "r" + std::to_string(repeat);
  row.fan_outs = point.fan_outs;
  row.plan = point.plan;
  row.requested_density = point.requested_density;
  row.pattern_seed = derive_stream(cell_stream, 0);

  ConnectionPattern pattern;
  if (point.plan.empty()) {
    pattern = generate_random_pattern(topology, row.pattern_seed);
  } else {
    const std::vector<JunctionLocality> plan = parse_plan(point.plan, topology.junction_count());
    const bool all_random =
        std::all_of(plan.begin(), plan.end(), [](const JunctionLocality& l) { return !l; });
    pattern = all_random ? generate_random_pattern(topology, row.pattern_seed)
                         : generate_windowed_pattern(topology, plan, row.pattern_seed);
  }

  for (const JunctionSpec& junction : topology.junctions) {
    row.junction_densities.push_back(junction_density(junction));
  }
  row.overall_density = overall_cl_density(topology.junctions);
  try {
    row.scatter = scatter_vector(pattern);
    row.scatter_min = scatter_metric(*row.scatter);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NonIntegralWindow) throw;
    row.scatter_min = std::numeric_limits<double>::quiet_NaN();
  }

  TrainConfig config = spec.train;
  config.seed = derive_stream(cell_stream, 1);
  config.epochs = spec.train.epochs;
  auto [net, report] = train(init_net(pattern, derive_stream(cell_stream, 2)), dataset, config);
  row.best_val_accuracy = report.best_val_accuracy;
  row.epochs = config.epochs;
  row.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return row;
}

std::vector<SweepResultRow> run_points(const SweepSpec& spec, const std::vector<SweepPoint>& points,
                                       int jobs) {
  const Dataset dataset = load_sweep_dataset(spec);
  std::vector<SweepResultRow> rows(points.size() * static_cast<std::size_t>(spec.repeats));

  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (;;) {
      const std::size_t cell = next.fetch_add(1);
      if (cell >= rows.size()) return;
      const std::size_t point_index = cell / static_cast<std::size_t>(spec.repeats);
      const int repeat = static_cast<int>(cell % static_cast<std::size_t>(spec.repeats));
      rows[cell] = run_cell(spec, dataset, points[point_index], point_index, repeat);
      std::cerr << "[sweep] " << rows[cell].id << " fan_outs=";
      for (std::size_t i = 0; i < rows[cell].fan_outs.size(); ++i) {
        std::cerr << (i ? "," : "") << rows[cell].fan_outs[i];
      }
      std::cerr << " acc=" << format_accuracy(rows[cell].best_val_accuracy) << " ("
                << static_cast<int>(rows[cell].runtime_seconds) << "s)\n";
    }
  };

  int thread_count = jobs > 0 ? jobs : static_cast<int>(std::thread::hardware_concurrency());
  thread_count = std::max(1, std::min<int>(thread_count, static_cast<int>(rows.size())));
  if (thread_count == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(thread_count));
    for (int t = 0; t < thread_count; ++t) threads.emplace_back(worker);
    for (std::thread& t : threads) t.join();
  }
  return rows;
}

std::vector<SweepPoint> density_sweep_points(const SweepSpec& spec) {
  std::vector<SweepPoint> points;
  for (const auto& tuple : spec.fan_out_tuples) {
    points.push_back({tuple, "", 0});
  }
  if (!spec.density_targets.empty()) {
    for (double target : spec.density_targets) {
      SweepPoint point;
      point.fan_outs = resolve_density_target(spec.layer_sizes, target);
      point.requested_density = target;
      points.push_back(point);
    }
  }
  if (points.empty()) raise(ErrorCode::BadFormat, "density sweep has no points");
  return points;
}

}  // namespace

std::vector<SweepResultRow> run_density_sweep(const SweepSpec& spec, int jobs) {
  std::vector<SweepResultRow> rows = run_points(spec, density_sweep_points(spec), jobs);
  std::sort(rows.begin(), rows.end(), [](const SweepResultRow& a, const SweepResultRow& b) {
    if (a.overall_density != b.overall_density) return a.overall_density < b.overall_density;
    return a.pattern_seed < b.pattern_seed;
  });
  return rows;
}

std::vector<SweepResultRow> run_junction_distribution(const SweepSpec& spec, int jobs) {
  if (spec.fan_out_tuples.empty()) {
    raise(ErrorCode::BadFormat, "junction_distribution needs explicit fan_outs");
  }
  std::vector<SweepPoint> points;
  for (const auto& tuple : spec.fan_out_tuples) {
    const NetworkTopology topology = make_topology(spec.layer_sizes, tuple);
    const double achieved = overall_cl_density(topology.junctions) * 100.0;
    if (std::abs(achieved - spec.overall_density_percent) > 1e-9) {
      raise(ErrorCode::InfeasibleOverallDensity,
            "tuple achieves " + std::to_string(achieved) + "% instead of " +
                std::to_string(spec.overall_density_percent) + "%");
    }
    SweepPoint point;
    point.fan_outs = tuple;
    point.requested_density = spec.overall_density_percent;
    points.push_back(point);
  }
  std::vector<SweepResultRow> rows = run_points(spec, points, jobs);
  for (SweepResultRow& row : rows) {
    row.equal_densities = true;
    for (double d : row.junction_densities) {
      if (std::abs(d - row.junction_densities[0]) > 1e-12) row.equal_densities = false;
    }
  }
  std::sort(rows.begin(), rows.end(), [](const SweepResultRow& a, const SweepResultRow& b) {
    if (a.junction_densities[0] != b.junction_densities[0]) {
      return a.junction_densities[0] < b.junction_densities[0];
    }
    return a.pattern_seed < b.pattern_seed;
  });
  return rows;
}

std::vector<SweepResultRow> run_scatter_study(const SweepSpec& spec, int jobs) {
  if (spec.plans.empty()) raise(ErrorCode::BadFormat, "scatter_study needs plans");
  std::vector<SweepPoint> points;
  if (spec.fan_out_tuples.size() != 1) {
    raise(ErrorCode::BadFormat, "scatter_study needs exactly one fan_outs tuple");
  }
  for (const std::string& plan : spec.plans) {
    points.push_back({spec.fan_out_tuples[0], plan, 0});
  }
  std::vector<SweepResultRow> rows = run_points(spec, points, jobs);
  for (const SweepResultRow& row : rows) {
    if (!row.scatter.has_value()) {
      raise(ErrorCode::NonIntegralWindow,
            "scatter study fan-outs must divide the layer sizes (row " + row.id + ")");
    }
  }
  std::sort(rows.begin(), rows.end(), [](const SweepResultRow& a, const SweepResultRow& b) {
    const ScatterOrdering order = compare_scatter(*a.scatter, *b.scatter);
    if (order == ScatterOrdering::b_better) return true;   // worse scatter first
    if (order == ScatterOrdering::a_better) return false;
    if (a.plan != b.plan) return a.plan < b.plan;
    return a.pattern_seed < b.pattern_seed;
  });
  return rows;
}

void write_sweep_csv(const SweepSpec& spec, const std::vector<SweepResultRow>& rows,
                     const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorCode::BadFormat, "cannot open " + path + " for writing");
  const std::size_t junctions = spec.layer_sizes.size() - 1;
  out << "id";
  if (spec.kind == SweepSpec::Kind::scatter_study) out << ",plan";
  out << ",fan_outs";
  for (std::size_t j = 1; j <= junctions; ++j) out << ",density_" << j;
  out << ",overall_density,requested_density_pct";
  if (spec.kind == SweepSpec::Kind::junction_distribution) out << ",equal_densities";
  for (std::size_t j = 1; j <= junctions; ++j) {
    out << ",S_" << j << "f,S_" << j << "b";
  }
  out << ",S_f,S_b,S,seed,best_val_accuracy,epochs\n";

  for (const SweepResultRow& row : rows) {
    out << row.id;
    if (spec.kind == SweepSpec::Kind::scatter_study) out << "," << row.plan;
    out << ",";
    for (std::size_t i = 0; i < row.fan_outs.size(); ++i) {
      out << (i ? ";" : "") << row.fan_outs[i];
    }
    for (double d : row.junction_densities) out << "," << format_fraction(d);
    out << "," << format_fraction(row.overall_density);
    out << "," << format_fraction(row.requested_density);
    if (spec.kind == SweepSpec::Kind::junction_distribution) {
      out << "," << (row.equal_densities ? 1 : 0);
    }
    if (row.scatter.has_value()) {
      for (const auto& [label, value] : row.scatter->entries) out << "," << format_fraction(value);
      out << "," << format_fraction(row.scatter_min);
    } else {
      for (std::size_t j = 0; j < 2 * junctions + 3; ++j) out << ",";
    }
    out << "," << row.pattern_seed;
    out << "," << format_accuracy(row.best_val_accuracy);
    out << "," << row.epochs << "\n";
  }
}

void write_median_csv(const SweepSpec& spec, const std::vector<SweepResultRow>& rows,
                      const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorCode::BadFormat, "cannot open " + path + " for writing");
  out << "point,fan_outs";
  if (spec.kind == SweepSpec::Kind::scatter_study) out << ",plan";
  out << ",overall_density,S,median_best_val_accuracy,repeats\n";

  // Group rows by point id prefix, preserving row order.
  std::vector<std::string> seen;
  for (const SweepResultRow& row : rows) {
    const std::string point = row.id.substr(0, row.id.find('r'));
    if (std::find(seen.begin(), seen.end(), point) != seen.end()) continue;
    seen.push_back(point);
    std::vector<double> accuracies;
    const SweepResultRow* sample = nullptr;
    for (const SweepResultRow& other : rows) {
      if (other.id.substr(0, other.id.find('r')) == point) {
        accuracies.push_back(other.best_val_accuracy);
        sample = &other;
      }
    }
    out << point << ",";
    for (std::size_t i = 0; i < sample->fan_outs.size(); ++i) {
      out << (i ? ";" : "") << sample->fan_outs[i];
    }
    if (spec.kind == SweepSpec::Kind::scatter_study) out << "," << sample->plan;
    out << "," << format_fraction(sample->overall_density);
    out << "," << (sample->scatter.has_value() ? format_fraction(sample->scatter_min) : "");
    out << "," << format_accuracy(median(accuracies));
    out << "," << accuracies.size() << "\n";
  }
}

std::vector<SweepResultRow> run_sweep(const SweepSpec& spec, int jobs) {
  std::vector<SweepResultRow> rows;
  switch (spec.kind) {
    case SweepSpec::Kind::density_sweep: rows = run_density_sweep(spec, jobs); break;
    case SweepSpec::Kind::junction_distribution: rows = run_junction_distribution(spec, jobs); break;
    case SweepSpec::Kind::scatter_study: rows = run_scatter_study(spec, jobs); break;
  }
  write_sweep_csv(spec, rows, spec.output_path);
  write_median_csv(spec, rows, median_path(spec.output_path));
  return rows;
}

}  // namespace presparse
