#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "presparse/types.hpp"

namespace presparse {

/// Labeled real-vector dataset; inputs hold one sample per row.
struct Dataset {
  MatX inputs;
  std::vector<int> labels;
  int class_count = 0;
  std::string name;

  Index size() const { return inputs.rows(); }
  Index dimension() const { return inputs.cols(); }
};

/// The 64 Morse codewords: every dot/dash sequence of length 1..5 in binary
/// order (dot before dash), plus the six-dot and six-dash sequences.
const std::array<std::string, 64>& morse_codebook();

constexpr Index kMorseFrameLength = 64;

struct MorseGenSpec {
  int samples_per_class = 125;
  double noise_sigma = 0.05;
  int max_shift = 0;
  std::uint64_t seed = 0;
};

/// Synthesized Morse symbol classification set: 64 inputs, 64 balanced
/// classes. A dot is one high sample, a dash three, with one low sample
/// between symbols and a three-sample gap after the codeword; the keying
/// repeats across the whole 64-sample frame (first onset at a random offset
/// in [0, max_shift]) and clipped gaussian noise is added. Pure in the spec.
Dataset synthesize_morse(const MorseGenSpec& spec);

/// Reads an IDX image/label pair; pixels are scaled to [0, 1] and images
/// flattened row-major.
Dataset load_idx_images(const std::string& images_path, const std::string& labels_path);

/// Stratified split: per class, a deterministic shuffle sends
/// round(count * validation_fraction) samples (capped to keep at least one in
/// training) to the validation side. Both halves preserve original order.
std::pair<Dataset, Dataset> split(const Dataset& dataset, double validation_fraction,
                                  std::uint64_t seed);

/// Zero-pads inputs to input_dim columns and raises class_count; the extra
/// classes never occur as labels.
Dataset pad_dataset(const Dataset& dataset, Index input_dim, int class_count);

void write_dataset_csv(const Dataset& dataset, const std::string& path);
Dataset read_dataset_csv(const std::string& path, const std::string& name);

}  // namespace presparse
