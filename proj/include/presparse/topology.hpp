#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "presparse/types.hpp"

namespace presparse {

/// One junction between adjacent connected layers: every left neuron has
/// exactly fan_out edges and every right neuron exactly fan_in edges, so
/// n_left * fan_out == n_right * fan_in == weight_count.
struct JunctionSpec {
  Index n_left = 0;
  Index n_right = 0;
  Index fan_out = 0;
  Index fan_in = 0;
  std::int64_t weight_count = 0;
};

/// Builds a JunctionSpec from layer sizes and fan-out. The fan-in is forced by
/// the biregularity constraint and must come out integral.
JunctionSpec derive_junction_spec(Index n_left, Index n_right, Index fan_out);

/// weight_count / (n_left * n_right).
double junction_density(const JunctionSpec& spec);

/// Weight-weighted aggregate density: sum(W_i) / sum(N_i * N_{i+1}).
double overall_cl_density(const std::vector<JunctionSpec>& specs);

struct NetworkTopology {
  std::vector<Index> layer_sizes;
  std::vector<JunctionSpec> junctions;

  Index junction_count() const { return static_cast<Index>(junctions.size()); }
  Index input_size() const { return layer_sizes.front(); }
  Index output_size() const { return layer_sizes.back(); }
  bool is_fully_connected() const;
};

NetworkTopology make_topology(const std::vector<Index>& layer_sizes,
                              const std::vector<Index>& fan_outs);

/// Junction adjacency: rows index the right layer, columns the left layer.
/// A single-junction matrix is {0,1}-valued with row sums fan_in and column
/// sums fan_out; composed span matrices hold path counts.
using AdjacencyMatrix = CountMat;

/// Checks the single-junction invariants (binary entries, exact fan sums).
bool is_biregular(const AdjacencyMatrix& adjacency, const JunctionSpec& spec);

enum class GeneratorTag { random, windowed, explicit_pattern };

const char* to_string(GeneratorTag tag);
GeneratorTag generator_tag_from_string(const std::string& text);

/// Which side of a junction a concentration constrains.
///   right_sources: each right neuron draws all edges from a block of
///                  windows_used contiguous left windows (of the fan_in many).
///   left_targets:  mirrored; each left neuron sends all edges into a block of
///                  windows_used contiguous right windows (of the fan_out many).
enum class ConcentrationSide { right_sources, left_targets };

/// How window blocks are assigned to the constrained neurons. Strided
/// round-robins blocks across neuron indices (neuron j gets block j mod B);
/// blocked gives consecutive neurons the same block. Strided concentrates one
/// scatter direction, blocked concentrates both.
enum class WindowAssignment { strided, blocked };

struct Concentration {
  ConcentrationSide side = ConcentrationSide::right_sources;
  Index windows_used = 1;
  WindowAssignment assignment = WindowAssignment::blocked;
};

/// Per-junction plan for the windowed generator; nullopt means plain random.
using JunctionLocality = std::optional<Concentration>;

struct ConnectionPattern {
  NetworkTopology topology;
  std::vector<AdjacencyMatrix> adjacency;
  std::optional<std::uint64_t> seed;
  GeneratorTag tag = GeneratorTag::explicit_pattern;
};

/// Uniform-ish random simple biregular pattern, one independent SplitMix64
/// stream per junction (derive_stream(seed, junction index)). Left stubs are
/// shuffled and dealt fan_in to each right neuron, then duplicate edges are
/// repaired by randomized 2-swaps until the graph is simple.
ConnectionPattern generate_random_pattern(const NetworkTopology& topology,
                                          std::uint64_t seed);

/// Planned pattern: each concentrated junction is partitioned into window
/// blocks and every (window, neuron group) cell is filled by an independent
/// random biregular subproblem, so fan constraints hold exactly while the
/// reachable windows are restricted. locality.size() must equal the junction
/// count.
ConnectionPattern generate_windowed_pattern(const NetworkTopology& topology,
                                            const std::vector<JunctionLocality>& locality,
                                            std::uint64_t seed);

/// Wraps explicitly supplied adjacency matrices, validating them.
ConnectionPattern make_explicit_pattern(const NetworkTopology& topology,
                                        std::vector<AdjacencyMatrix> adjacency);

/// Throws unless every junction satisfies the biregular invariants.
void validate_pattern(const ConnectionPattern& pattern);

/// A_{X:Y} = A_Y * ... * A_X for 1-based junction span X..Y; entry (j, k)
/// counts paths from left neuron k of layer X to right neuron j of layer Y+1.
AdjacencyMatrix compose_adjacency(const ConnectionPattern& pattern, Index span_start,
                                  Index span_end);

/// (product of fan_outs, product of fan_ins) over a 1-based junction span.
std::pair<std::int64_t, std::int64_t> equivalent_fans(const NetworkTopology& topology,
                                                      Index span_start, Index span_end);

/// Canonical edge list of one junction: (right, left) pairs ascending, the
/// order used by pattern files, checkpoints, and gradient accumulation.
std::vector<std::pair<Index, Index>> canonical_edges(const AdjacencyMatrix& adjacency);

}  // namespace presparse
