#include <doctest.h>

#include "presparse/rng.hpp"
#include "presparse/scatter.hpp"

using namespace presparse;

namespace {

// (8,4,4) with fan-outs (1,2): hidden neurons take input pairs
// {1,2},{5,6},{3,7},{4,8}; outputs pair opposite hidden windows. Scatter
// computed by hand: S = [0.75, 1, 1, 1, 0.75, 1].
ConnectionPattern worked_example() {
  const NetworkTopology topology = make_topology({8, 4, 4}, {1, 2});
  AdjacencyMatrix first = AdjacencyMatrix::Zero(4, 8);
  first(0, 0) = first(0, 1) = 1;
  first(1, 4) = first(1, 5) = 1;
  first(2, 2) = first(2, 6) = 1;
  first(3, 3) = first(3, 7) = 1;
  AdjacencyMatrix second = AdjacencyMatrix::Zero(4, 4);
  second(0, 0) = second(0, 2) = 1;
  second(1, 1) = second(1, 3) = 1;
  second(2, 0) = second(2, 3) = 1;
  second(3, 1) = second(3, 2) = 1;
  return make_explicit_pattern(topology, {std::move(first), std::move(second)});
}

// Same first junction, outputs pairing adjacent hidden instead; exercises a
// composed span whose scatter dips below the per-junction values.
// Hand-computed: S = [0.75, 1, 0.75, 0.75, 0.625, 0.75].
ConnectionPattern skewed_example() {
  const NetworkTopology topology = make_topology({8, 4, 4}, {1, 2});
  AdjacencyMatrix first = AdjacencyMatrix::Zero(4, 8);
  first(0, 0) = first(0, 1) = 1;
  first(1, 4) = first(1, 5) = 1;
  first(2, 2) = first(2, 6) = 1;
  first(3, 3) = first(3, 7) = 1;
  AdjacencyMatrix second = AdjacencyMatrix::Zero(4, 4);
  second(0, 0) = second(0, 1) = 1;
  second(1, 1) = second(1, 2) = 1;
  second(2, 2) = second(2, 3) = 1;
  second(3, 3) = second(3, 0) = 1;
  return make_explicit_pattern(topology, {std::move(first), std::move(second)});
}

}  // namespace

TEST_CASE("window partitions split layers exactly or clamp") {
  const WindowPartition halves = make_partition(8, 2);
  CHECK(halves.window_count == 2);
  CHECK(halves.neurons_per_window == 4);

  const WindowPartition clamped = make_partition(64, 1024);
  CHECK(clamped.window_count == 64);
  CHECK(clamped.neurons_per_window == 1);

  const WindowPartition whole = make_partition(24, 1);
  CHECK(whole.window_count == 1);
  CHECK(whole.neurons_per_window == 24);

  CHECK_THROWS_WITH_AS(make_partition(8, 3), doctest::Contains("NonIntegralWindow"), Error);
}

TEST_CASE("window adjacency sums over contiguous slices") {
  const ConnectionPattern pattern = worked_example();
  const AdjacencyMatrix& first = pattern.adjacency[0];

  const WindowAdjacency left = left_window_adjacency(first, make_partition(8, 2));
  CHECK(left.entries.rows() == 4);
  CHECK(left.entries.cols() == 2);
  CHECK(left.entries.sum() == pattern.topology.junctions[0].weight_count);
  CHECK(left.entries(0, 0) == 2);  // hidden 1 takes both inputs from window 1
  CHECK(left.entries(0, 1) == 0);
  CHECK(left.entries(2, 0) == 1);
  CHECK(left.entries(2, 1) == 1);

  const WindowAdjacency right = right_window_adjacency(first, make_partition(4, 1));
  CHECK(right.entries.rows() == 1);
  CHECK(right.entries.cols() == 8);
  CHECK((right.entries.array() == 1).all());

  CHECK_THROWS_AS(left_window_adjacency(first, make_partition(4, 2)), Error);
  CHECK_THROWS_AS(right_window_adjacency(first, make_partition(8, 2)), Error);
}

TEST_CASE("fully connected window matrices are flat") {
  const NetworkTopology topology = make_topology({6, 4}, {4});
  const ConnectionPattern pattern = generate_random_pattern(topology, 1);
  const WindowAdjacency left =
      left_window_adjacency(pattern.adjacency[0], make_partition(6, 6));
  CHECK((left.entries.array() == 1).all());
  const WindowAdjacency right =
      right_window_adjacency(pattern.adjacency[0], make_partition(4, 4));
  CHECK((right.entries.array() == 1).all());
}

TEST_CASE("scatter of the worked example") {
  const ConnectionPattern pattern = worked_example();
  const WindowAdjacency first_left =
      left_window_adjacency(pattern.adjacency[0], make_partition(8, 2));
  CHECK(scatter_forward(first_left, 2, 4) == 0.75);  // 6 of 8 cells reached

  const ScatterVector scatter = scatter_vector(pattern);
  REQUIRE(scatter.entries.size() == 6);
  CHECK(scatter.entries[0].first == "S_1f");
  CHECK(scatter.entries[0].second == 0.75);
  CHECK(scatter.entries[1].first == "S_1b");
  CHECK(scatter.entries[1].second == 1.0);
  CHECK(scatter.entries[2].second == 1.0);
  CHECK(scatter.entries[3].second == 1.0);
  CHECK(scatter.entries[4].first == "S_f");
  CHECK(scatter.entries[4].second == 0.75);
  CHECK(scatter.entries[5].first == "S_b");
  CHECK(scatter.entries[5].second == 1.0);
  CHECK(scatter_metric(scatter) == 0.75);
}

TEST_CASE("scatter of the skewed example dips on the composed span") {
  const ScatterVector scatter = scatter_vector(skewed_example());
  const std::vector<double> expected{0.75, 1.0, 0.75, 0.75, 0.625, 0.75};
  REQUIRE(scatter.entries.size() == expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    CHECK(scatter.entries[i].second == expected[i]);
  }
  CHECK(scatter_metric(scatter) == 0.625);
}

TEST_CASE("fully connected networks scatter to all ones") {
  for (const auto& sizes : {std::vector<Index>{8, 4, 4}, std::vector<Index>{5, 3},
                            std::vector<Index>{6, 6, 6, 6}}) {
    std::vector<Index> fan_outs(sizes.begin() + 1, sizes.end());
    const ConnectionPattern pattern =
        generate_random_pattern(make_topology(sizes, fan_outs), 2);
    for (const auto& [label, value] : scatter_vector(pattern).entries) {
      CHECK(value == 1.0);
    }
  }
}

TEST_CASE("concentrated patterns bottom out at one window") {
  const NetworkTopology topology = make_topology({64, 64}, {8});
  const std::vector<JunctionLocality> plan{
      Concentration{ConcentrationSide::right_sources, 1, WindowAssignment::blocked}};
  const ConnectionPattern pattern = generate_windowed_pattern(topology, plan, 3);
  const ScatterVector scatter = scatter_vector(pattern);
  CHECK(scatter.entries[0].second == 0.125);  // S_1f = 1/8
  CHECK(scatter_metric(scatter) == 0.125);

  const std::vector<JunctionLocality> mirrored{
      Concentration{ConcentrationSide::left_targets, 1, WindowAssignment::blocked}};
  const ScatterVector mirrored_scatter =
      scatter_vector(generate_windowed_pattern(topology, mirrored, 3));
  CHECK(mirrored_scatter.entries[1].second == 0.125);  // S_1b = 1/8
}

TEST_CASE("scatter values stay in (0, 1] and respect fan floors") {
  SplitMix64 rng(31);
  for (int trial = 0; trial < 8; ++trial) {
    const NetworkTopology topology = make_topology({16, 8, 8}, {2, 4});
    const ConnectionPattern pattern = generate_random_pattern(topology, rng.next());
    const ScatterVector scatter = scatter_vector(pattern);
    REQUIRE(scatter.entries.size() == 6);
    for (const auto& [label, value] : scatter.entries) {
      CHECK(value > 0.0);
      CHECK(value <= 1.0);
    }
    CHECK(scatter.entries[0].second >= 1.0 / topology.junctions[0].fan_in);
    CHECK(scatter.entries[1].second >= 1.0 / topology.junctions[0].fan_out);
  }
}

TEST_CASE("window sums commute with composition grouping") {
  SplitMix64 rng(41);
  for (int trial = 0; trial < 6; ++trial) {
    const NetworkTopology topology = make_topology({16, 8, 4}, {2, 2});
    const ConnectionPattern pattern = generate_random_pattern(topology, rng.next());
    const AdjacencyMatrix composed = compose_adjacency(pattern, 1, 2);
    const WindowPartition windows = make_partition(16, 4);
    // Summing columns of A2*A1 equals A2 * (column-summed A1).
    const CountMat direct = left_window_adjacency(composed, windows).entries;
    const CountMat staged =
        pattern.adjacency[1] * left_window_adjacency(pattern.adjacency[0], windows).entries;
    CHECK(direct == staged);
    CHECK(direct.sum() == composed.sum());
  }
}

TEST_CASE("scatter vectors of single-junction networks have four entries") {
  const ConnectionPattern pattern =
      generate_random_pattern(make_topology({16, 8}, {2}), 5);
  const ScatterVector scatter = scatter_vector(pattern);
  REQUIRE(scatter.entries.size() == 4);
  CHECK(scatter.entries[2].first == "S_f");
  CHECK(scatter.entries[2].second == scatter.entries[0].second);
  CHECK(scatter.entries[3].second == scatter.entries[1].second);
}

namespace {

ScatterVector literal_vector(const std::vector<double>& values) {
  ScatterVector scatter;
  for (std::size_t i = 0; i < values.size(); ++i) {
    scatter.entries.emplace_back("S_" + std::to_string(i), values[i]);
  }
  return scatter;
}

}  // namespace

TEST_CASE("scatter comparison breaks ties by successive minima") {
  const ScatterVector three = literal_vector({0.125, 0.125, 1.0, 0.125, 1.0, 1.0});
  const ScatterVector two = literal_vector({0.125, 0.125, 0.63, 0.66, 1.0, 1.0});
  const ScatterVector one = literal_vector({0.66, 0.63, 1.0, 0.125, 1.0, 1.0});
  CHECK(compare_scatter(two, three) == ScatterOrdering::a_better);
  CHECK(compare_scatter(three, two) == ScatterOrdering::b_better);
  CHECK(compare_scatter(one, two) == ScatterOrdering::a_better);
  CHECK(compare_scatter(one, one) == ScatterOrdering::tie);

  // Same minimum, differing counts of the second-lowest value.
  const ScatterVector lower = literal_vector({1.0 / 16, 0.25, 0.25, 1.0});
  const ScatterVector upper = literal_vector({1.0 / 16, 0.25, 0.8, 1.0});
  CHECK(compare_scatter(upper, lower) == ScatterOrdering::a_better);

  // Order of entries does not matter, only the sorted values.
  const ScatterVector shuffled = literal_vector({1.0, 0.125, 1.0, 0.125, 1.0, 0.125});
  CHECK(compare_scatter(shuffled, three) == ScatterOrdering::tie);

  CHECK_THROWS_WITH_AS(compare_scatter(lower, three), doctest::Contains("LengthMismatch"), Error);
}

TEST_CASE("scatter metric is the minimum entry") {
  CHECK(scatter_metric(literal_vector({1.0, 1.0, 1.0})) == 1.0);
  CHECK(scatter_metric(literal_vector({0.5, 0.125, 0.75})) == 0.125);
  CHECK(compare_scatter(literal_vector({0.5, 0.25}), literal_vector({0.5, 0.125})) ==
        ScatterOrdering::a_better);
}
