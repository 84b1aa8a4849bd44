#include "presparse/scatter.hpp"

#include <algorithm>

namespace presparse {

WindowPartition make_partition(Index layer_size, Index requested_windows) {
  if (layer_size <= 0 || requested_windows <= 0) {
    raise(ErrorCode::BadFormat, "partition arguments must be positive");
  }
  WindowPartition partition;
  partition.layer_size = layer_size;
  if (requested_windows >= layer_size) {
    partition.window_count = layer_size;
    partition.neurons_per_window = 1;
    return partition;
  }
  if (layer_size % requested_windows != 0) {
    raise(ErrorCode::NonIntegralWindow, std::to_string(requested_windows) +
                                            " windows do not divide layer size " +
                                            std::to_string(layer_size));
  }
  partition.window_count = requested_windows;
  partition.neurons_per_window = layer_size / requested_windows;
  return partition;
}

WindowAdjacency left_window_adjacency(const AdjacencyMatrix& adjacency,
                                      const WindowPartition& left_windows) {
  if (adjacency.cols() != left_windows.layer_size) {
    raise(ErrorCode::DimensionMismatch, "partition does not cover the left layer");
  }
  WindowAdjacency windowed;
  windowed.side = WindowSide::left;
  windowed.entries.resize(adjacency.rows(), left_windows.window_count);
  for (Index w = 0; w < left_windows.window_count; ++w) {
    windowed.entries.col(w) =
        adjacency.middleCols(w * left_windows.neurons_per_window, left_windows.neurons_per_window)
            .rowwise()
            .sum();
  }
  return windowed;
}

WindowAdjacency right_window_adjacency(const AdjacencyMatrix& adjacency,
                                       const WindowPartition& right_windows) {
  if (adjacency.rows() != right_windows.layer_size) {
    raise(ErrorCode::DimensionMismatch, "partition does not cover the right layer");
  }
  WindowAdjacency windowed;
  windowed.side = WindowSide::right;
  windowed.entries.resize(right_windows.window_count, adjacency.cols());
  for (Index w = 0; w < right_windows.window_count; ++w) {
    windowed.entries.row(w) =
        adjacency
            .middleRows(w * right_windows.neurons_per_window, right_windows.neurons_per_window)
            .colwise()
            .sum();
  }
  return windowed;
}

double scatter_forward(const WindowAdjacency& windowed, Index window_count, Index n_right) {
  if (windowed.side != WindowSide::left || windowed.entries.rows() != n_right ||
      windowed.entries.cols() != window_count) {
    raise(ErrorCode::DimensionMismatch, "expected a left-windowed matrix of n_right x windows");
  }
  return reached_fraction(windowed.entries);
}

double scatter_backward(const WindowAdjacency& windowed, Index window_count, Index n_left) {
  if (windowed.side != WindowSide::right || windowed.entries.rows() != window_count ||
      windowed.entries.cols() != n_left) {
    raise(ErrorCode::DimensionMismatch, "expected a right-windowed matrix of windows x n_left");
  }
  return reached_fraction(windowed.entries);
}

std::vector<double> ScatterVector::values() const {
  std::vector<double> out;
  out.reserve(entries.size());
  for (const auto& [label, value] : entries) out.push_back(value);
  return out;
}

ScatterVector scatter_vector(const ConnectionPattern& pattern) {
  const NetworkTopology& topology = pattern.topology;
  const Index junction_count = topology.junction_count();
  ScatterVector scatter;
  scatter.entries.reserve(static_cast<std::size_t>(2 * junction_count + 2));

  for (Index i = 0; i < junction_count; ++i) {
    const JunctionSpec& spec = topology.junctions[static_cast<std::size_t>(i)];
    const AdjacencyMatrix& adjacency = pattern.adjacency[static_cast<std::size_t>(i)];
    const WindowPartition left = make_partition(spec.n_left, spec.fan_in);
    const WindowPartition right = make_partition(spec.n_right, spec.fan_out);
    const std::string tag = std::to_string(i + 1);
    scatter.entries.emplace_back(
        "S_" + tag + "f",
        scatter_forward(left_window_adjacency(adjacency, left), left.window_count, spec.n_right));
    scatter.entries.emplace_back(
        "S_" + tag + "b", scatter_backward(right_window_adjacency(adjacency, right),
                                           right.window_count, spec.n_left));
  }

  const AdjacencyMatrix composed = compose_adjacency(pattern, 1, junction_count);
  const auto [fan_out_product, fan_in_product] = equivalent_fans(topology, 1, junction_count);
  const WindowPartition left = make_partition(topology.input_size(), fan_in_product);
  const WindowPartition right = make_partition(topology.output_size(), fan_out_product);
  scatter.entries.emplace_back(
      "S_f", scatter_forward(left_window_adjacency(composed, left), left.window_count,
                             topology.output_size()));
  scatter.entries.emplace_back(
      "S_b", scatter_backward(right_window_adjacency(composed, right), right.window_count,
                              topology.input_size()));
  return scatter;
}

double scatter_metric(const ScatterVector& scatter) {
  double minimum = 1.0;
  for (const auto& [label, value] : scatter.entries) minimum = std::min(minimum, value);
  return minimum;
}

ScatterOrdering compare_scatter(const ScatterVector& a, const ScatterVector& b) {
  if (a.entries.size() != b.entries.size()) {
    raise(ErrorCode::LengthMismatch, "scatter vectors differ in length");
  }
  std::vector<double> sorted_a = a.values();
  std::vector<double> sorted_b = b.values();
  std::sort(sorted_a.begin(), sorted_a.end());
  std::sort(sorted_b.begin(), sorted_b.end());
  for (std::size_t i = 0; i < sorted_a.size(); ++i) {
    if (sorted_a[i] > sorted_b[i]) return ScatterOrdering::a_better;
    if (sorted_a[i] < sorted_b[i]) return ScatterOrdering::b_better;
  }
  return ScatterOrdering::tie;
}

}  // namespace presparse
