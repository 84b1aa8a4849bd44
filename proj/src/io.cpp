#include "presparse/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace presparse {

namespace {

std::string join_indices(const std::vector<Index>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(values[i]);
  }
  return out;
}

std::vector<Index> topology_fan_outs(const NetworkTopology& topology) {
  std::vector<Index> fan_outs;
  fan_outs.reserve(topology.junctions.size());
  for (const JunctionSpec& j : topology.junctions) fan_outs.push_back(j.fan_out);
  return fan_outs;
}

}  // namespace

std::vector<Index> parse_index_list(const std::string& text) {
  std::vector<Index> values;
  std::stringstream stream(text);
  std::string field;
  while (std::getline(stream, field, ',')) {
    if (field.empty()) raise(ErrorCode::BadFormat, "empty entry in list '" + text + "'");
    values.push_back(static_cast<Index>(std::stoll(field)));
  }
  if (values.empty()) raise(ErrorCode::BadFormat, "empty list");
  return values;
}

void save_pattern(const ConnectionPattern& pattern, std::ostream& out) {
  out << "version 1\n";
  out << "layer_sizes " << join_indices(pattern.topology.layer_sizes) << "\n";
  out << "fan_outs " << join_indices(topology_fan_outs(pattern.topology)) << "\n";
  out << "generator_tag " << to_string(pattern.tag) << "\n";
  if (pattern.seed.has_value()) out << "seed " << *pattern.seed << "\n";
  out << "edges\n";
  for (std::size_t j = 0; j < pattern.adjacency.size(); ++j) {
    // canonical_edges already walks (right, left) ascending.
    for (const auto& [right, left] : canonical_edges(pattern.adjacency[j])) {
      out << (j + 1) << ' ' << (left + 1) << ' ' << (right + 1) << '\n';
    }
  }
}

void save_pattern(const ConnectionPattern& pattern, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorCode::BadFormat, "cannot open " + path + " for writing");
  save_pattern(pattern, out);
}

ConnectionPattern load_pattern(std::istream& in, const std::string& origin) {
  std::map<std::string, std::string> header;
  std::string line;
  bool saw_edges = false;
  while (std::getline(in, line)) {
    if (line == "edges") {
      saw_edges = true;
      break;
    }
    const auto space = line.find(' ');
    if (space == std::string::npos) raise(ErrorCode::BadFormat, origin + ": bad header line");
    header[line.substr(0, space)] = line.substr(space + 1);
  }
  if (!saw_edges) raise(ErrorCode::BadFormat, origin + ": missing edges section");
  for (const char* key : {"version", "layer_sizes", "fan_outs", "generator_tag"}) {
    if (!header.count(key)) raise(ErrorCode::BadFormat, origin + ": missing header field " + key);
  }
  if (header["version"] != "1") raise(ErrorCode::BadFormat, origin + ": unsupported version");

  const NetworkTopology topology =
      make_topology(parse_index_list(header["layer_sizes"]), parse_index_list(header["fan_outs"]));

  std::vector<AdjacencyMatrix> adjacency;
  adjacency.reserve(topology.junctions.size());
  for (const JunctionSpec& spec : topology.junctions) {
    adjacency.push_back(AdjacencyMatrix::Zero(spec.n_right, spec.n_left));
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream fields(line);
    Index junction = 0, left = 0, right = 0;
    if (!(fields >> junction >> left >> right)) {
      raise(ErrorCode::BadFormat, origin + ": bad edge record '" + line + "'");
    }
    if (junction < 1 || junction > topology.junction_count()) {
      raise(ErrorCode::BadFormat, origin + ": junction index out of range");
    }
    const JunctionSpec& spec = topology.junctions[static_cast<std::size_t>(junction - 1)];
    if (left < 1 || left > spec.n_left || right < 1 || right > spec.n_right) {
      raise(ErrorCode::BadFormat, origin + ": edge endpoint out of range");
    }
    adjacency[static_cast<std::size_t>(junction - 1)](right - 1, left - 1) += 1;
  }

  ConnectionPattern pattern;
  pattern.topology = topology;
  pattern.adjacency = std::move(adjacency);
  pattern.tag = generator_tag_from_string(header["generator_tag"]);
  if (header.count("seed")) pattern.seed = std::stoull(header["seed"]);
  validate_pattern(pattern);
  return pattern;
}

ConnectionPattern load_pattern(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::TruncatedFile, "cannot open " + path);
  return load_pattern(in, path);
}

std::uint64_t config_digest(const TrainConfig& config) {
  char text[256];
  std::snprintf(text, sizeof(text), "%s|%.17g|%.17g|%.17g|%.17g|%.17g|%d|%d|%" PRIu64 "|%.17g",
                to_string(config.optimizer), config.learning_rate, config.adam_beta1,
                config.adam_beta2, config.adam_epsilon, config.l2_coefficient, config.batch_size,
                config.epochs, config.seed, config.validation_fraction);
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (const char* p = text; *p; ++p) {
    hash ^= static_cast<unsigned char>(*p);
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

void save_checkpoint(const SparseNet& net, const TrainConfig& config, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorCode::BadFormat, "cannot open " + path + " for writing");
  char buffer[40];
  out << "version 1\n";
  out << "layer_sizes " << join_indices(net.pattern.topology.layer_sizes) << "\n";
  out << "fan_outs " << join_indices(topology_fan_outs(net.pattern.topology)) << "\n";
  out << "seed " << net.init_seed << "\n";
  std::snprintf(buffer, sizeof(buffer), "%016" PRIx64, config_digest(config));
  out << "config_digest " << buffer << "\n";
  for (std::size_t j = 0; j < net.weights.size(); ++j) {
    out << "weights " << (j + 1) << ' ' << net.weights[j].size() << "\n";
    for (Index e = 0; e < net.weights[j].size(); ++e) {
      std::snprintf(buffer, sizeof(buffer), "%.17g", net.weights[j][e]);
      out << buffer << "\n";
    }
  }
  for (std::size_t j = 0; j < net.biases.size(); ++j) {
    out << "biases " << (j + 1) << ' ' << net.biases[j].size() << "\n";
    for (Index b = 0; b < net.biases[j].size(); ++b) {
      std::snprintf(buffer, sizeof(buffer), "%.17g", net.biases[j][b]);
      out << buffer << "\n";
    }
  }
}

SparseNet load_checkpoint(const std::string& path, const ConnectionPattern& pattern) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::TruncatedFile, "cannot open " + path);
  std::string line;
  std::map<std::string, std::string> header;
  for (int i = 0; i < 5 && std::getline(in, line); ++i) {
    const auto space = line.find(' ');
    if (space == std::string::npos) raise(ErrorCode::BadFormat, path + ": bad header line");
    header[line.substr(0, space)] = line.substr(space + 1);
  }
  if (header["layer_sizes"] != join_indices(pattern.topology.layer_sizes) ||
      header["fan_outs"] != join_indices(topology_fan_outs(pattern.topology))) {
    raise(ErrorCode::DimensionMismatch, path + " does not match the supplied pattern");
  }

  SparseNet net = init_net(pattern, std::stoull(header["seed"]));
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream fields(line);
    std::string section;
    std::size_t junction = 0;
    Index count = 0;
    if (!(fields >> section >> junction >> count)) {
      raise(ErrorCode::BadFormat, path + ": bad section line '" + line + "'");
    }
    if (junction < 1 || junction > net.weights.size()) {
      raise(ErrorCode::BadFormat, path + ": section junction out of range");
    }
    VecX& target = section == "weights" ? net.weights[junction - 1]
                 : section == "biases"  ? net.biases[junction - 1]
                                        : (raise(ErrorCode::BadFormat, path + ": unknown section"),
                                           net.weights[0]);
    if (count != target.size()) {
      raise(ErrorCode::CountMismatch, path + ": section size does not match the pattern");
    }
    for (Index i = 0; i < count; ++i) {
      if (!std::getline(in, line)) raise(ErrorCode::TruncatedFile, path + ": missing values");
      target[i] = std::stod(line);
    }
  }
  return net;
}

std::vector<JunctionLocality> parse_plan(const std::string& text, Index junction_count) {
  std::vector<JunctionLocality> plan;
  std::stringstream stream(text);
  std::string token;
  while (std::getline(stream, token, '/')) {
    if (token == "rand") {
      plan.push_back(std::nullopt);
      continue;
    }
    std::stringstream parts(token);
    std::string side, windows, mode;
    if (!std::getline(parts, side, ':') || !std::getline(parts, windows, ':') ||
        !std::getline(parts, mode, ':')) {
      raise(ErrorCode::BadFormat, "bad plan token '" + token + "'");
    }
    Concentration conc;
    if (side == "src") {
      conc.side = ConcentrationSide::right_sources;
    } else if (side == "tgt") {
      conc.side = ConcentrationSide::left_targets;
    } else {
      raise(ErrorCode::BadFormat, "plan side must be src or tgt, got '" + side + "'");
    }
    conc.windows_used = static_cast<Index>(std::stoll(windows));
    if (mode == "blocked") {
      conc.assignment = WindowAssignment::blocked;
    } else if (mode == "strided") {
      conc.assignment = WindowAssignment::strided;
    } else {
      raise(ErrorCode::BadFormat, "plan mode must be blocked or strided, got '" + mode + "'");
    }
    plan.push_back(conc);
  }
  if (static_cast<Index>(plan.size()) != junction_count) {
    raise(ErrorCode::LengthMismatch, "plan '" + text + "' needs one token per junction");
  }
  return plan;
}

std::string plan_to_string(const std::vector<JunctionLocality>& plan) {
  std::string out;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    if (i) out += '/';
    if (!plan[i].has_value()) {
      out += "rand";
      continue;
    }
    const Concentration& conc = *plan[i];
    out += conc.side == ConcentrationSide::right_sources ? "src" : "tgt";
    out += ':';
    out += std::to_string(conc.windows_used);
    out += ':';
    out += conc.assignment == WindowAssignment::blocked ? "blocked" : "strided";
  }
  return out;
}

namespace {

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> values;
  std::stringstream stream(text);
  std::string field;
  while (std::getline(stream, field, ',')) values.push_back(std::stod(field));
  return values;
}

}  // namespace

SweepSpec parse_sweep_spec(std::istream& in, const std::string& origin) {
  std::map<std::string, std::string> fields;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    while (!line.empty() && (line.back() == ' ' || line.back() == '\r')) line.pop_back();
    if (line.empty()) continue;
    const auto equals = line.find('=');
    if (equals == std::string::npos) {
      raise(ErrorCode::BadFormat, origin + ": expected key=value, got '" + line + "'");
    }
    fields[line.substr(0, equals)] = line.substr(equals + 1);
  }

  auto need = [&](const std::string& key) -> const std::string& {
    auto it = fields.find(key);
    if (it == fields.end()) raise(ErrorCode::BadFormat, origin + ": missing field " + key);
    return it->second;
  };
  auto get = [&](const std::string& key, const std::string& fallback) {
    auto it = fields.find(key);
    return it == fields.end() ? fallback : it->second;
  };

  SweepSpec spec;
  const std::string kind = need("kind");
  if (kind == "density_sweep") {
    spec.kind = SweepSpec::Kind::density_sweep;
  } else if (kind == "junction_distribution") {
    spec.kind = SweepSpec::Kind::junction_distribution;
  } else if (kind == "scatter_study") {
    spec.kind = SweepSpec::Kind::scatter_study;
  } else {
    raise(ErrorCode::BadFormat, origin + ": unknown kind '" + kind + "'");
  }

  spec.layer_sizes = parse_index_list(need("layers"));
  if (fields.count("fan_outs")) {
    std::stringstream tuples(fields["fan_outs"]);
    std::string tuple;
    while (std::getline(tuples, tuple, ';')) {
      if (!tuple.empty()) spec.fan_out_tuples.push_back(parse_index_list(tuple));
    }
  }
  if (fields.count("densities")) spec.density_targets = parse_double_list(fields["densities"]);
  if (fields.count("plans")) {
    std::stringstream plans(fields["plans"]);
    std::string plan;
    while (std::getline(plans, plan, ';')) {
      if (!plan.empty()) spec.plans.push_back(plan);
    }
  }
  if (fields.count("overall_density")) {
    spec.overall_density_percent = std::stod(fields["overall_density"]);
  }

  spec.repeats = std::stoi(get("repeats", "3"));
  if (spec.repeats < 1) raise(ErrorCode::BadFormat, origin + ": repeats must be at least 1");
  spec.train.optimizer = optimizer_from_string(get("optimizer", "sgd"));
  spec.train.learning_rate = std::stod(get("lr", "0.1"));
  spec.train.l2_coefficient = std::stod(get("l2", "0"));
  spec.train.batch_size = std::stoi(get("batch", "128"));
  spec.train.epochs = std::stoi(get("epochs", "30"));
  spec.train.seed = std::stoull(get("seed", "0"));
  spec.train.validation_fraction = std::stod(get("val_fraction", "0.2"));

  spec.dataset_kind = need("dataset");
  if (spec.dataset_kind == "idx") {
    spec.idx_images = need("idx_images");
    spec.idx_labels = need("idx_labels");
  } else if (spec.dataset_kind == "csv") {
    spec.csv_path = need("csv_path");
  } else if (spec.dataset_kind == "morse") {
    spec.morse.samples_per_class = std::stoi(get("morse_samples_per_class", "125"));
    spec.morse.noise_sigma = std::stod(get("morse_noise", "0.05"));
    spec.morse.max_shift = std::stoi(get("morse_shift", "12"));
    spec.morse.seed = std::stoull(get("morse_seed", "1"));
  } else {
    raise(ErrorCode::BadFormat, origin + ": dataset must be morse, idx, or csv");
  }
  if (fields.count("pad_inputs")) spec.pad_inputs = std::stoll(fields["pad_inputs"]);
  if (fields.count("pad_classes")) spec.pad_classes = std::stoi(fields["pad_classes"]);
  spec.output_path = need("output");
  return spec;
}

SweepSpec parse_sweep_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::TruncatedFile, "cannot open " + path);
  return parse_sweep_spec(in, path);
}

Dataset load_sweep_dataset(const SweepSpec& spec) {
  Dataset dataset;
  if (spec.dataset_kind == "morse") {
    dataset = synthesize_morse(spec.morse);
  } else if (spec.dataset_kind == "idx") {
    dataset = load_idx_images(spec.idx_images, spec.idx_labels);
  } else {
    dataset = read_dataset_csv(spec.csv_path, "csv");
  }
  if (spec.pad_inputs > 0 || spec.pad_classes > 0) {
    dataset = pad_dataset(dataset, std::max(spec.pad_inputs, dataset.dimension()),
                          std::max(spec.pad_classes, dataset.class_count));
  }
  return dataset;
}

std::string format_fraction(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

std::string format_accuracy(double value) {
  char buffer[16];
  std::snprintf(buffer, sizeof(buffer), "%.4f", value);
  return buffer;
}

}  // namespace presparse
