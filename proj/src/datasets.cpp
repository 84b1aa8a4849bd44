#include "presparse/datasets.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "presparse/rng.hpp"

namespace presparse {

const std::array<std::string, 64>& morse_codebook() {
  static const std::array<std::string, 64> codebook = [] {
    std::array<std::string, 64> words;
    std::size_t index = 0;
    for (int length = 1; length <= 5; ++length) {
      for (int bits = 0; bits < (1 << length); ++bits) {
        std::string word(static_cast<std::size_t>(length), '.');
        for (int s = 0; s < length; ++s) {
          if (bits & (1 << (length - 1 - s))) word[static_cast<std::size_t>(s)] = '-';
        }
        words[index++] = word;
      }
    }
    words[index++] = "......";
    words[index++] = "------";
    return words;
  }();
  return codebook;
}

namespace {

// Pulse train for one codeword: dot = 1 high sample, dash = 3, one low sample
// between symbols.
std::vector<double> morse_pulse(const std::string& word) {
  std::vector<double> pulse;
  for (std::size_t s = 0; s < word.size(); ++s) {
    if (s > 0) pulse.push_back(0.0);
    const int high = word[s] == '-' ? 3 : 1;
    for (int h = 0; h < high; ++h) pulse.push_back(1.0);
  }
  return pulse;
}

}  // namespace

Dataset synthesize_morse(const MorseGenSpec& spec) {
  if (spec.samples_per_class <= 0) raise(ErrorCode::EmptyDataset, "samples_per_class must be positive");
  if (spec.noise_sigma < 0 || spec.max_shift < 0) {
    raise(ErrorCode::BadFormat, "noise_sigma and max_shift must be non-negative");
  }
  const auto& codebook = morse_codebook();
  std::size_t longest = 0;
  for (const std::string& word : codebook) {
    longest = std::max(longest, morse_pulse(word).size());
  }
  if (static_cast<Index>(longest) + spec.max_shift > kMorseFrameLength) {
    raise(ErrorCode::FrameOverflow, "max_shift " + std::to_string(spec.max_shift) +
                                        " pushes the longest codeword past the frame");
  }

  Dataset dataset;
  dataset.name = "morse";
  dataset.class_count = static_cast<int>(codebook.size());
  const Index total = static_cast<Index>(codebook.size()) * spec.samples_per_class;
  dataset.inputs.setZero(total, kMorseFrameLength);
  dataset.labels.resize(static_cast<std::size_t>(total));

  SplitMix64 rng(derive_stream(spec.seed, 0x6d6f727365ULL));  // "morse"
  Index row = 0;
  for (int label = 0; label < dataset.class_count; ++label) {
    // The codeword keys continuously, separated by the three-sample letter
    // gap, so every input position carries signal for every class.
    std::vector<double> period = morse_pulse(codebook[static_cast<std::size_t>(label)]);
    for (int gap = 0; gap < 3; ++gap) period.push_back(0.0);
    const auto period_length = static_cast<Index>(period.size());
    for (int rep = 0; rep < spec.samples_per_class; ++rep, ++row) {
      const Index shift =
          spec.max_shift == 0
              ? 0
              : static_cast<Index>(rng.next_below(static_cast<std::uint64_t>(spec.max_shift) + 1));
      for (Index c = 0; c < kMorseFrameLength; ++c) {
        const Index phase = ((c - shift) % period_length + period_length) % period_length;
        dataset.inputs(row, c) = period[static_cast<std::size_t>(phase)];
      }
      if (spec.noise_sigma > 0) {
        for (Index c = 0; c < kMorseFrameLength; ++c) {
          const double noisy = dataset.inputs(row, c) + spec.noise_sigma * rng.next_gaussian();
          dataset.inputs(row, c) = std::clamp(noisy, 0.0, 1.0);
        }
      }
      dataset.labels[static_cast<std::size_t>(row)] = label;
    }
  }
  return dataset;
}

namespace {

std::uint32_t read_be32(std::istream& in, const std::string& path) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) {
    raise(ErrorCode::TruncatedFile, path + " ended inside the header");
  }
  return (static_cast<std::uint32_t>(bytes[0]) << 24) | (static_cast<std::uint32_t>(bytes[1]) << 16) |
         (static_cast<std::uint32_t>(bytes[2]) << 8) | static_cast<std::uint32_t>(bytes[3]);
}

}  // namespace

Dataset load_idx_images(const std::string& images_path, const std::string& labels_path) {
  std::ifstream images(images_path, std::ios::binary);
  if (!images) raise(ErrorCode::TruncatedFile, "cannot open " + images_path);
  if (read_be32(images, images_path) != 0x00000803u) {
    raise(ErrorCode::BadMagic, images_path + " is not an IDX image file");
  }
  const std::uint32_t image_count = read_be32(images, images_path);
  const std::uint32_t rows = read_be32(images, images_path);
  const std::uint32_t cols = read_be32(images, images_path);

  std::ifstream labels(labels_path, std::ios::binary);
  if (!labels) raise(ErrorCode::TruncatedFile, "cannot open " + labels_path);
  if (read_be32(labels, labels_path) != 0x00000801u) {
    raise(ErrorCode::BadMagic, labels_path + " is not an IDX label file");
  }
  const std::uint32_t label_count = read_be32(labels, labels_path);
  if (label_count != image_count) {
    raise(ErrorCode::CountMismatch, "image count " + std::to_string(image_count) +
                                        " != label count " + std::to_string(label_count));
  }

  const Index dimension = static_cast<Index>(rows) * static_cast<Index>(cols);
  Dataset dataset;
  dataset.name = "idx";
  dataset.inputs.resize(static_cast<Index>(image_count), dimension);
  dataset.labels.resize(image_count);

  std::vector<unsigned char> pixel_row(static_cast<std::size_t>(dimension));
  for (std::uint32_t i = 0; i < image_count; ++i) {
    if (!images.read(reinterpret_cast<char*>(pixel_row.data()), dimension)) {
      raise(ErrorCode::TruncatedFile, images_path + " ended inside image data");
    }
    for (Index c = 0; c < dimension; ++c) {
      dataset.inputs(static_cast<Index>(i), c) =
          static_cast<double>(pixel_row[static_cast<std::size_t>(c)]) / 255.0;
    }
  }
  std::vector<unsigned char> label_bytes(image_count);
  if (!labels.read(reinterpret_cast<char*>(label_bytes.data()), image_count)) {
    raise(ErrorCode::TruncatedFile, labels_path + " ended inside label data");
  }
  int max_label = 0;
  for (std::uint32_t i = 0; i < image_count; ++i) {
    dataset.labels[i] = static_cast<int>(label_bytes[i]);
    max_label = std::max(max_label, dataset.labels[i]);
  }
  dataset.class_count = max_label + 1;
  return dataset;
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, double validation_fraction,
                                  std::uint64_t seed) {
  if (dataset.size() == 0) raise(ErrorCode::EmptyDataset, "cannot split an empty dataset");
  if (validation_fraction < 0 || validation_fraction >= 1) {
    raise(ErrorCode::BadFormat, "validation_fraction must lie in [0, 1)");
  }

  std::vector<std::vector<Index>> by_class(static_cast<std::size_t>(dataset.class_count));
  for (Index i = 0; i < dataset.size(); ++i) {
    const int label = dataset.labels[static_cast<std::size_t>(i)];
    if (label < 0 || label >= dataset.class_count) {
      raise(ErrorCode::BadLabel, "label " + std::to_string(label) + " out of range");
    }
    by_class[static_cast<std::size_t>(label)].push_back(i);
  }

  std::vector<bool> to_validation(static_cast<std::size_t>(dataset.size()), false);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& members = by_class[c];
    if (members.empty()) continue;
    SplitMix64 rng(derive_stream(seed, c));
    rng.shuffle(members);
    const auto count = static_cast<std::size_t>(members.size());
    auto take = static_cast<std::size_t>(static_cast<double>(count) * validation_fraction + 0.5);
    if (take >= count) take = count - 1;  // keep every class represented in training
    for (std::size_t k = 0; k < take; ++k) {
      to_validation[static_cast<std::size_t>(members[k])] = true;
    }
  }

  Dataset train, validation;
  train.class_count = validation.class_count = dataset.class_count;
  train.name = dataset.name + "/train";
  validation.name = dataset.name + "/validation";
  const Index val_total =
      static_cast<Index>(std::count(to_validation.begin(), to_validation.end(), true));
  train.inputs.resize(dataset.size() - val_total, dataset.dimension());
  validation.inputs.resize(val_total, dataset.dimension());
  train.labels.reserve(static_cast<std::size_t>(dataset.size() - val_total));
  validation.labels.reserve(static_cast<std::size_t>(val_total));
  Index train_row = 0;
  Index val_row = 0;
  for (Index i = 0; i < dataset.size(); ++i) {
    if (to_validation[static_cast<std::size_t>(i)]) {
      validation.inputs.row(val_row++) = dataset.inputs.row(i);
      validation.labels.push_back(dataset.labels[static_cast<std::size_t>(i)]);
    } else {
      train.inputs.row(train_row++) = dataset.inputs.row(i);
      train.labels.push_back(dataset.labels[static_cast<std::size_t>(i)]);
    }
  }
  return {std::move(train), std::move(validation)};
}

Dataset pad_dataset(const Dataset& dataset, Index input_dim, int class_count) {
  if (input_dim < dataset.dimension() || class_count < dataset.class_count) {
    raise(ErrorCode::DimensionMismatch, "padding cannot shrink a dataset");
  }
  Dataset padded;
  padded.name = dataset.name + "/padded";
  padded.class_count = class_count;
  padded.labels = dataset.labels;
  padded.inputs.setZero(dataset.size(), input_dim);
  padded.inputs.leftCols(dataset.dimension()) = dataset.inputs;
  return padded;
}

void write_dataset_csv(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorCode::BadFormat, "cannot open " + path + " for writing");
  for (Index c = 0; c < dataset.dimension(); ++c) out << "x" << (c + 1) << ",";
  out << "label\n";
  char buffer[40];
  for (Index i = 0; i < dataset.size(); ++i) {
    for (Index c = 0; c < dataset.dimension(); ++c) {
      std::snprintf(buffer, sizeof(buffer), "%.17g", dataset.inputs(i, c));
      out << buffer << ",";
    }
    out << dataset.labels[static_cast<std::size_t>(i)] << "\n";
  }
}

Dataset read_dataset_csv(const std::string& path, const std::string& name) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::TruncatedFile, "cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) raise(ErrorCode::TruncatedFile, path + " is empty");
  const Index dimension = static_cast<Index>(std::count(line.begin(), line.end(), ','));

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream fields(line);
    std::string field;
    std::vector<double> row;
    row.reserve(static_cast<std::size_t>(dimension));
    while (std::getline(fields, field, ',')) row.push_back(std::stod(field));
    if (static_cast<Index>(row.size()) != dimension + 1) {
      raise(ErrorCode::BadFormat, path + ": ragged row");
    }
    labels.push_back(static_cast<int>(row.back()));
    row.pop_back();
    rows.push_back(std::move(row));
  }
  if (rows.empty()) raise(ErrorCode::EmptyDataset, path + " has no samples");

  Dataset dataset;
  dataset.name = name;
  dataset.inputs.resize(static_cast<Index>(rows.size()), dimension);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (Index c = 0; c < dimension; ++c) {
      dataset.inputs(static_cast<Index>(i), c) = rows[i][static_cast<std::size_t>(c)];
    }
  }
  dataset.labels = std::move(labels);
  dataset.class_count = *std::max_element(dataset.labels.begin(), dataset.labels.end()) + 1;
  return dataset;
}

}  // namespace presparse
