#pragma once

#include <string>
#include <utility>
#include <vector>

#include "presparse/topology.hpp"
#include "presparse/types.hpp"

namespace presparse {

/// Equal contiguous slices of a layer. The window count is the relevant fan
/// (or fan product); when it meets or exceeds the layer size the windows clamp
/// to one neuron each.
struct WindowPartition {
  Index layer_size = 0;
  Index window_count = 0;
  Index neurons_per_window = 0;
};

WindowPartition make_partition(Index layer_size, Index requested_windows);

enum class WindowSide { left, right };

/// Adjacency summed over the windows of one side. Left windows group columns
/// (entries: n_right x windows); right windows group rows (windows x n_left).
struct WindowAdjacency {
  WindowSide side = WindowSide::left;
  CountMat entries;
};

WindowAdjacency left_window_adjacency(const AdjacencyMatrix& adjacency,
                                      const WindowPartition& left_windows);

WindowAdjacency right_window_adjacency(const AdjacencyMatrix& adjacency,
                                       const WindowPartition& right_windows);

/// Fraction of (neuron, window) pairs with at least one connection; entries
/// above one count once.
template <typename Derived>
double reached_fraction(const Eigen::MatrixBase<Derived>& window_entries) {
  return static_cast<double>((window_entries.array() >= 1).count()) /
         static_cast<double>(window_entries.size());
}

/// Forward scatter of one junction or span: windows on the left, neurons on
/// the right.
double scatter_forward(const WindowAdjacency& windowed, Index window_count, Index n_right);

/// Backward scatter: windows on the right, neurons on the left.
double scatter_backward(const WindowAdjacency& windowed, Index window_count, Index n_left);

/// Labeled scatter values: S_1f, S_1b, ..., S_Jf, S_Jb, then S_f, S_b for the
/// whole 1:J span. Always 2J + 2 entries.
struct ScatterVector {
  std::vector<std::pair<std::string, double>> entries;

  std::vector<double> values() const;
};

ScatterVector scatter_vector(const ConnectionPattern& pattern);

/// The pattern's headline metric: the minimum entry of the scatter vector.
double scatter_metric(const ScatterVector& scatter);

enum class ScatterOrdering { a_better, b_better, tie };

/// Compares ascending-sorted scatter values lexicographically; the vector
/// with the larger value at the first difference wins.
ScatterOrdering compare_scatter(const ScatterVector& a, const ScatterVector& b);

}  // namespace presparse
