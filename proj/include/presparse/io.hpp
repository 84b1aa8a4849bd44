#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "presparse/datasets.hpp"
#include "presparse/net.hpp"
#include "presparse/topology.hpp"

namespace presparse {

/// Pattern file: `key value` header lines (version, layer_sizes, fan_outs,
/// generator_tag, optional seed), an `edges` sentinel, then one
/// "junction left right" record per edge, 1-based, sorted ascending by
/// (junction, right, left). The canonical sort makes files byte-comparable.
void save_pattern(const ConnectionPattern& pattern, std::ostream& out);
void save_pattern(const ConnectionPattern& pattern, const std::string& path);
ConnectionPattern load_pattern(std::istream& in, const std::string& origin);
ConnectionPattern load_pattern(const std::string& path);

/// Checkpoint: textual header (layer sizes, fan-outs, seed, config digest)
/// plus weights and biases in canonical order at 17 significant digits.
/// Loading requires the matching pattern.
void save_checkpoint(const SparseNet& net, const TrainConfig& config, const std::string& path);
SparseNet load_checkpoint(const std::string& path, const ConnectionPattern& pattern);

/// FNV-1a over the canonical config text; ties a checkpoint to its recipe.
std::uint64_t config_digest(const TrainConfig& config);

/// Comma list like "64,1024,64".
std::vector<Index> parse_index_list(const std::string& text);

/// Junction plan grammar, one token per junction joined by '/':
///   rand                  plain random junction
///   src:<c>:<blocked|strided>   right neurons draw from c left windows
///   tgt:<c>:<blocked|strided>   left neurons send into c right windows
std::vector<JunctionLocality> parse_plan(const std::string& text, Index junction_count);
std::string plan_to_string(const std::vector<JunctionLocality>& plan);

/// Line-oriented key=value experiment description; '#' starts a comment.
struct SweepSpec {
  enum class Kind { density_sweep, junction_distribution, scatter_study };
  Kind kind = Kind::density_sweep;
  std::vector<Index> layer_sizes;
  std::vector<std::vector<Index>> fan_out_tuples;  // explicit points
  std::vector<double> density_targets;             // percent, resolved to tuples
  std::vector<std::string> plans;                  // scatter_study only
  double overall_density_percent = 0;              // junction_distribution only
  int repeats = 3;
  TrainConfig train;
  std::string dataset_kind;  // morse | idx | csv
  std::string idx_images, idx_labels, csv_path;
  MorseGenSpec morse;
  Index pad_inputs = 0;  // optional zero-padding of the input dimension
  int pad_classes = 0;
  std::string output_path;
};

SweepSpec parse_sweep_spec(const std::string& path);
SweepSpec parse_sweep_spec(std::istream& in, const std::string& origin);

/// Loads the dataset a sweep spec names.
Dataset load_sweep_dataset(const SweepSpec& spec);

/// Fixed-format CSV helpers: LF endings, '%.17g' for fractions, accuracies
/// with 4 decimals.
std::string format_fraction(double value);
std::string format_accuracy(double value);

}  // namespace presparse
