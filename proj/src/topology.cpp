#include "presparse/topology.hpp"

#include <algorithm>
#include <numeric>

#include "presparse/rng.hpp"

namespace presparse {

JunctionSpec derive_junction_spec(Index n_left, Index n_right, Index fan_out) {
  if (n_left <= 0 || n_right <= 0 || fan_out <= 0) {
    raise(ErrorCode::BadFormat, "layer sizes and fan-out must be positive");
  }
  if (fan_out > n_right) {
    raise(ErrorCode::FanOutTooLarge, "fan_out " + std::to_string(fan_out) +
                                         " exceeds right layer size " + std::to_string(n_right));
  }
  const std::int64_t weight_count = static_cast<std::int64_t>(n_left) * fan_out;
  if (weight_count % n_right != 0) {
    raise(ErrorCode::NonIntegralFanIn,
          std::to_string(n_left) + "*" + std::to_string(fan_out) + " is not divisible by " +
              std::to_string(n_right));
  }
  JunctionSpec spec;
  spec.n_left = n_left;
  spec.n_right = n_right;
  spec.fan_out = fan_out;
  spec.fan_in = static_cast<Index>(weight_count / n_right);
  spec.weight_count = weight_count;
  return spec;
}

double junction_density(const JunctionSpec& spec) {
  return static_cast<double>(spec.weight_count) /
         (static_cast<double>(spec.n_left) * static_cast<double>(spec.n_right));
}

double overall_cl_density(const std::vector<JunctionSpec>& specs) {
  if (specs.empty()) raise(ErrorCode::EmptyNetwork, "no junctions");
  std::int64_t weights = 0;
  std::int64_t slots = 0;
  for (const JunctionSpec& spec : specs) {
    weights += spec.weight_count;
    slots += static_cast<std::int64_t>(spec.n_left) * spec.n_right;
  }
  return static_cast<double>(weights) / static_cast<double>(slots);
}

bool NetworkTopology::is_fully_connected() const {
  return std::all_of(junctions.begin(), junctions.end(),
                     [](const JunctionSpec& j) { return j.fan_out == j.n_right; });
}

NetworkTopology make_topology(const std::vector<Index>& layer_sizes,
                              const std::vector<Index>& fan_outs) {
  if (layer_sizes.size() < 2) raise(ErrorCode::EmptyNetwork, "need at least two layers");
  if (fan_outs.size() + 1 != layer_sizes.size()) {
    raise(ErrorCode::LengthMismatch, "expected one fan-out per junction");
  }
  NetworkTopology topology;
  topology.layer_sizes = layer_sizes;
  topology.junctions.reserve(fan_outs.size());
  for (std::size_t i = 0; i < fan_outs.size(); ++i) {
    topology.junctions.push_back(
        derive_junction_spec(layer_sizes[i], layer_sizes[i + 1], fan_outs[i]));
  }
  return topology;
}

bool is_biregular(const AdjacencyMatrix& adjacency, const JunctionSpec& spec) {
  if (adjacency.rows() != spec.n_right || adjacency.cols() != spec.n_left) return false;
  if ((adjacency.array() < 0).any() || (adjacency.array() > 1).any()) return false;
  if ((adjacency.rowwise().sum().array() != spec.fan_in).any()) return false;
  if ((adjacency.colwise().sum().array() != spec.fan_out).any()) return false;
  return true;
}

const char* to_string(GeneratorTag tag) {
  switch (tag) {
    case GeneratorTag::random: return "random";
    case GeneratorTag::windowed: return "windowed";
    case GeneratorTag::explicit_pattern: return "explicit";
  }
  return "unknown";
}

GeneratorTag generator_tag_from_string(const std::string& text) {
  if (text == "random") return GeneratorTag::random;
  if (text == "windowed") return GeneratorTag::windowed;
  if (text == "explicit") return GeneratorTag::explicit_pattern;
  raise(ErrorCode::BadFormat, "unknown generator tag '" + text + "'");
}

namespace {

// Random simple biregular bipartite graph on (n_left, n_right) with exact
// degrees (fan_out, fan_in). Stub-deal then 2-swap repair; junctions denser
// than half are generated as the complement of the sparse counterpart so the
// repair loop always works below 50% density.
AdjacencyMatrix random_biregular(Index n_left, Index n_right, Index fan_out, Index fan_in,
                                 SplitMix64& rng) {
  AdjacencyMatrix adjacency(n_right, n_left);
  if (fan_out == n_right) {
    adjacency.setOnes();
    return adjacency;
  }
  if (2 * fan_out > n_right) {
    const AdjacencyMatrix complement =
        random_biregular(n_left, n_right, n_right - fan_out, n_left - fan_in, rng);
    return AdjacencyMatrix::Ones(n_right, n_left) - complement;
  }

  const std::size_t edge_count = static_cast<std::size_t>(n_left) * fan_out;
  std::vector<std::uint32_t> deal(edge_count);
  std::size_t pos = 0;
  for (Index left = 0; left < n_left; ++left) {
    for (Index e = 0; e < fan_out; ++e) deal[pos++] = static_cast<std::uint32_t>(left);
  }
  rng.shuffle(deal);

  // multiplicity[right * n_left + left]; values stay far below 2^16.
  std::vector<std::uint16_t> multiplicity(static_cast<std::size_t>(n_left) * n_right, 0);
  auto mult = [&](std::size_t right, std::uint32_t left) -> std::uint16_t& {
    return multiplicity[right * static_cast<std::size_t>(n_left) + left];
  };

  const std::size_t fi = static_cast<std::size_t>(fan_in);
  std::vector<std::size_t> pending;
  const auto tally = [&] {
    std::fill(multiplicity.begin(), multiplicity.end(), 0);
    pending.clear();
    for (std::size_t s = 0; s < edge_count; ++s) {
      if (++mult(s / fi, deal[s]) >= 2) pending.push_back(s);
    }
  };
  tally();
  // Each queued slot stands for one excess copy of its (right, left) pair.
  // An accepted swap removes exactly that excess and creates none, so the
  // queue shrinks to empty and the graph ends simple. If a tight instance
  // starves the swap search, re-deal from the same stream and try again.
  std::size_t stale_attempts = 0;
  const std::size_t restart_limit = 64 * edge_count + 4096;
  while (!pending.empty()) {
    if (++stale_attempts > restart_limit) {
      rng.shuffle(deal);
      tally();
      stale_attempts = 0;
      continue;
    }
    const std::size_t s = pending.back();
    const std::size_t right = s / fi;
    const std::uint32_t left = deal[s];
    if (mult(right, left) < 2) {
      pending.pop_back();
      continue;
    }
    const std::size_t other = rng.next_below(edge_count);
    const std::size_t other_right = other / fi;
    const std::uint32_t other_left = deal[other];
    if (other_right == right || other_left == left) continue;
    if (mult(right, other_left) != 0 || mult(other_right, left) != 0) continue;
    --mult(right, left);
    --mult(other_right, other_left);
    deal[s] = other_left;
    deal[other] = left;
    ++mult(right, other_left);
    ++mult(other_right, left);
    pending.pop_back();
    stale_attempts = 0;
  }

  for (Index right = 0; right < n_right; ++right) {
    for (Index left = 0; left < n_left; ++left) {
      adjacency(right, left) =
          mult(static_cast<std::size_t>(right), static_cast<std::uint32_t>(left));
    }
  }
  return adjacency;
}

AdjacencyMatrix generate_junction(const JunctionSpec& spec, const JunctionLocality& locality,
                                  std::uint64_t junction_seed) {
  if (!locality.has_value()) {
    SplitMix64 rng(junction_seed);
    return random_biregular(spec.n_left, spec.n_right, spec.fan_out, spec.fan_in, rng);
  }

  const Concentration& conc = *locality;
  const bool on_sources = conc.side == ConcentrationSide::right_sources;
  // Window geometry: the constrained side's opposite layer is split into
  // fan-many windows; neurons on the constrained side each use a block of
  // windows_used consecutive windows.
  const Index windows = on_sources ? spec.fan_in : spec.fan_out;
  const Index windowed_layer = on_sources ? spec.n_left : spec.n_right;
  const Index grouped_layer = on_sources ? spec.n_right : spec.n_left;
  const Index used = conc.windows_used;

  if (used < 1 || used > windows) {
    raise(ErrorCode::InfeasibleLocality, "windows_used must lie in [1, fan]");
  }
  if (windowed_layer % windows != 0) {
    raise(ErrorCode::InfeasibleLocality, "layer size " + std::to_string(windowed_layer) +
                                             " not divisible into " + std::to_string(windows) +
                                             " windows");
  }
  if (windows % used != 0) {
    raise(ErrorCode::InfeasibleLocality, "windows_used must divide the window count");
  }
  const Index block_count = windows / used;
  if (grouped_layer % block_count != 0) {
    raise(ErrorCode::InfeasibleLocality, "cannot assign window blocks evenly");
  }
  const Index window_size = windowed_layer / windows;
  const Index group_size = grouped_layer / block_count;
  // Degrees inside one (window, group) cell.
  const Index grouped_degree = on_sources ? spec.fan_in : spec.fan_out;
  if (grouped_degree % used != 0) {
    raise(ErrorCode::InfeasibleLocality, "windows_used must divide the constrained fan");
  }
  const Index cell_grouped_degree = grouped_degree / used;
  const Index cell_window_degree = on_sources ? spec.fan_out : spec.fan_in;
  if (cell_grouped_degree > window_size) {
    raise(ErrorCode::InfeasibleLocality, "window too small for a simple graph");
  }
  if (cell_window_degree > group_size) {
    raise(ErrorCode::InfeasibleLocality, "group too small for a simple graph");
  }

  AdjacencyMatrix adjacency = AdjacencyMatrix::Zero(spec.n_right, spec.n_left);
  std::vector<Index> group_members(static_cast<std::size_t>(group_size));
  for (Index block = 0; block < block_count; ++block) {
    // Members of this block on the grouped side.
    for (Index m = 0; m < group_size; ++m) {
      group_members[static_cast<std::size_t>(m)] =
          conc.assignment == WindowAssignment::blocked ? block * group_size + m
                                                       : m * block_count + block;
    }
    for (Index w = block * used; w < (block + 1) * used; ++w) {
      SplitMix64 cell_rng(derive_stream(junction_seed, static_cast<std::uint64_t>(w)));
      // Window neurons play the role whose degree is cell_window_degree.
      const AdjacencyMatrix cell =
          on_sources ? random_biregular(window_size, group_size, cell_window_degree,
                                        cell_grouped_degree, cell_rng)
                     : random_biregular(group_size, window_size, cell_grouped_degree,
                                        cell_window_degree, cell_rng);
      for (Index r = 0; r < cell.rows(); ++r) {
        for (Index c = 0; c < cell.cols(); ++c) {
          if (cell(r, c) == 0) continue;
          if (on_sources) {
            // rows: grouped right neurons, cols: window left neurons
            adjacency(group_members[static_cast<std::size_t>(r)], w * window_size + c) = 1;
          } else {
            // rows: window right neurons, cols: grouped left neurons
            adjacency(w * window_size + r, group_members[static_cast<std::size_t>(c)]) = 1;
          }
        }
      }
    }
  }
  return adjacency;
}

}  // namespace

ConnectionPattern generate_random_pattern(const NetworkTopology& topology, std::uint64_t seed) {
  ConnectionPattern pattern;
  pattern.topology = topology;
  pattern.seed = seed;
  pattern.tag = GeneratorTag::random;
  pattern.adjacency.reserve(topology.junctions.size());
  for (std::size_t i = 0; i < topology.junctions.size(); ++i) {
    pattern.adjacency.push_back(
        generate_junction(topology.junctions[i], std::nullopt, derive_stream(seed, i)));
  }
  validate_pattern(pattern);
  return pattern;
}

ConnectionPattern generate_windowed_pattern(const NetworkTopology& topology,
                                            const std::vector<JunctionLocality>& locality,
                                            std::uint64_t seed) {
  if (locality.size() != topology.junctions.size()) {
    raise(ErrorCode::LengthMismatch, "one locality entry per junction required");
  }
  ConnectionPattern pattern;
  pattern.topology = topology;
  pattern.seed = seed;
  pattern.tag = GeneratorTag::windowed;
  pattern.adjacency.reserve(topology.junctions.size());
  for (std::size_t i = 0; i < topology.junctions.size(); ++i) {
    pattern.adjacency.push_back(
        generate_junction(topology.junctions[i], locality[i], derive_stream(seed, i)));
  }
  validate_pattern(pattern);
  return pattern;
}

ConnectionPattern make_explicit_pattern(const NetworkTopology& topology,
                                        std::vector<AdjacencyMatrix> adjacency) {
  ConnectionPattern pattern;
  pattern.topology = topology;
  pattern.adjacency = std::move(adjacency);
  pattern.seed = std::nullopt;
  pattern.tag = GeneratorTag::explicit_pattern;
  validate_pattern(pattern);
  return pattern;
}

void validate_pattern(const ConnectionPattern& pattern) {
  if (pattern.adjacency.size() != pattern.topology.junctions.size()) {
    raise(ErrorCode::LengthMismatch, "one adjacency matrix per junction required");
  }
  for (std::size_t i = 0; i < pattern.adjacency.size(); ++i) {
    if (!is_biregular(pattern.adjacency[i], pattern.topology.junctions[i])) {
      raise(ErrorCode::BadFormat,
            "junction " + std::to_string(i + 1) + " violates the biregular invariants");
    }
  }
}

AdjacencyMatrix compose_adjacency(const ConnectionPattern& pattern, Index span_start,
                                  Index span_end) {
  const Index junction_count = pattern.topology.junction_count();
  if (span_start < 1 || span_end < span_start || span_end > junction_count) {
    raise(ErrorCode::BadSpan, "span must satisfy 1 <= X <= Y <= J");
  }
  AdjacencyMatrix result = pattern.adjacency[static_cast<std::size_t>(span_start - 1)];
  for (Index i = span_start + 1; i <= span_end; ++i) {
    result = (pattern.adjacency[static_cast<std::size_t>(i - 1)] * result).eval();
  }
  return result;
}

std::pair<std::int64_t, std::int64_t> equivalent_fans(const NetworkTopology& topology,
                                                      Index span_start, Index span_end) {
  if (span_start < 1 || span_end < span_start || span_end > topology.junction_count()) {
    raise(ErrorCode::BadSpan, "span must satisfy 1 <= X <= Y <= J");
  }
  std::int64_t fan_out_product = 1;
  std::int64_t fan_in_product = 1;
  for (Index i = span_start; i <= span_end; ++i) {
    fan_out_product *= topology.junctions[static_cast<std::size_t>(i - 1)].fan_out;
    fan_in_product *= topology.junctions[static_cast<std::size_t>(i - 1)].fan_in;
  }
  return {fan_out_product, fan_in_product};
}

std::vector<std::pair<Index, Index>> canonical_edges(const AdjacencyMatrix& adjacency) {
  std::vector<std::pair<Index, Index>> edges;
  edges.reserve(static_cast<std::size_t>(adjacency.sum()));
  for (Index right = 0; right < adjacency.rows(); ++right) {
    for (Index left = 0; left < adjacency.cols(); ++left) {
      if (adjacency(right, left) != 0) edges.emplace_back(right, left);
    }
  }
  return edges;
}

}  // namespace presparse
