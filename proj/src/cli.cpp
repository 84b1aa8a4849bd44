#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "presparse/harness.hpp"
#include "presparse/io.hpp"
#include "presparse/rng.hpp"

namespace presparse {

namespace {

struct DatasetArgs {
  std::string kind = "morse";
  std::string idx_images, idx_labels, csv_path;
  MorseGenSpec morse;
  Index pad_inputs = 0;
  int pad_classes = 0;
};

void add_dataset_options(CLI::App* cmd, DatasetArgs& args) {
  cmd->add_option("--dataset", args.kind, "Dataset kind: morse, idx, or csv")
      ->check(CLI::IsMember({"morse", "idx", "csv"}));
  cmd->add_option("--idx-images", args.idx_images, "IDX image file (dataset=idx)");
  cmd->add_option("--idx-labels", args.idx_labels, "IDX label file (dataset=idx)");
  cmd->add_option("--csv-path", args.csv_path, "Dataset CSV (dataset=csv)");
  cmd->add_option("--morse-samples-per-class", args.morse.samples_per_class);
  cmd->add_option("--morse-noise", args.morse.noise_sigma);
  cmd->add_option("--morse-shift", args.morse.max_shift);
  cmd->add_option("--morse-seed", args.morse.seed);
  cmd->add_option("--pad-inputs", args.pad_inputs, "Zero-pad inputs to this dimension");
  cmd->add_option("--pad-classes", args.pad_classes, "Raise the class count to this value");
}

Dataset load_dataset(const DatasetArgs& args) {
  Dataset dataset;
  if (args.kind == "morse") {
    dataset = synthesize_morse(args.morse);
  } else if (args.kind == "idx") {
    dataset = load_idx_images(args.idx_images, args.idx_labels);
  } else {
    dataset = read_dataset_csv(args.csv_path, "csv");
  }
  if (args.pad_inputs > 0 || args.pad_classes > 0) {
    dataset = pad_dataset(dataset, std::max(args.pad_inputs, dataset.dimension()),
                          std::max(args.pad_classes, dataset.class_count));
  }
  return dataset;
}

void write_scatter_row(std::ostream& out, const std::string& id, const ConnectionPattern& pattern,
                       bool with_header) {
  const ScatterVector scatter = scatter_vector(pattern);
  if (with_header) {
    out << "pattern_id";
    for (const auto& [label, value] : scatter.entries) out << "," << label;
    out << ",S,generator_tag,seed\n";
  }
  out << id;
  for (const auto& [label, value] : scatter.entries) out << "," << format_fraction(value);
  out << "," << format_fraction(scatter_metric(scatter));
  out << "," << to_string(pattern.tag);
  out << ",";
  if (pattern.seed.has_value()) out << *pattern.seed;
  out << "\n";
}

void write_svg_plot(const std::string& csv_path, const std::string& x_column,
                    const std::string& y_column, bool lines, const std::string& out_path) {
  std::ifstream in(csv_path);
  if (!in) raise(ErrorCode::TruncatedFile, "cannot open " + csv_path);
  std::string line;
  if (!std::getline(in, line)) raise(ErrorCode::TruncatedFile, csv_path + " is empty");
  std::vector<std::string> columns;
  std::stringstream head(line);
  std::string field;
  while (std::getline(head, field, ',')) columns.push_back(field);
  const auto find_column = [&](const std::string& name) {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (columns[i] == name) return i;
    }
    raise(ErrorCode::BadFormat, csv_path + " has no column '" + name + "'");
  };
  const std::size_t xi = find_column(x_column);
  const std::size_t yi = find_column(y_column);

  std::vector<std::pair<double, double>> data;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream fields(line);
    std::vector<std::string> cells;
    while (std::getline(fields, field, ',')) cells.push_back(field);
    if (cells.size() <= std::max(xi, yi)) continue;
    try {
      data.emplace_back(std::stod(cells[xi]), std::stod(cells[yi]));
    } catch (const std::exception&) {
      continue;  // non-numeric row
    }
  }
  if (data.empty()) raise(ErrorCode::EmptyDataset, "no numeric rows to plot");

  double x_lo = data[0].first, x_hi = data[0].first;
  double y_lo = data[0].second, y_hi = data[0].second;
  for (const auto& [x, y] : data) {
    x_lo = std::min(x_lo, x); x_hi = std::max(x_hi, x);
    y_lo = std::min(y_lo, y); y_hi = std::max(y_hi, y);
  }
  if (x_hi == x_lo) { x_hi += 1; x_lo -= 1; }
  if (y_hi == y_lo) { y_hi += 1; y_lo -= 1; }
  const double width = 640, height = 420, margin = 56;
  const auto sx = [&](double x) { return margin + (x - x_lo) / (x_hi - x_lo) * (width - 2 * margin); };
  const auto sy = [&](double y) { return height - margin - (y - y_lo) / (y_hi - y_lo) * (height - 2 * margin); };

  std::ofstream out(out_path, std::ios::binary);
  if (!out) raise(ErrorCode::BadFormat, "cannot open " + out_path + " for writing");
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
      << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
  out << "<line x1='" << margin << "' y1='" << height - margin << "' x2='" << width - margin
      << "' y2='" << height - margin << "' stroke='black'/>\n";
  out << "<line x1='" << margin << "' y1='" << margin << "' x2='" << margin << "' y2='"
      << height - margin << "' stroke='black'/>\n";
  out << "<text x='" << width / 2 << "' y='" << height - 12 << "' text-anchor='middle'>"
      << x_column << "</text>\n";
  out << "<text x='16' y='" << height / 2 << "' transform='rotate(-90 16 " << height / 2
      << ")' text-anchor='middle'>" << y_column << "</text>\n";
  if (lines) {
    std::vector<std::pair<double, double>> sorted = data;
    std::sort(sorted.begin(), sorted.end());
    out << "<polyline fill='none' stroke='steelblue' stroke-width='1.5' points='";
    for (const auto& [x, y] : sorted) out << sx(x) << "," << sy(y) << " ";
    out << "'/>\n";
  }
  for (const auto& [x, y] : data) {
    out << "<circle cx='" << sx(x) << "' cy='" << sy(y) << "' r='3' fill='firebrick'/>\n";
  }
  out << "</svg>\n";
}

}  // namespace

int cli_dispatch(int argc, char** argv) {
  CLI::App app{"Pre-defined sparse connectivity toolkit"};
  app.require_subcommand(1);

  // generate
  auto* generate = app.add_subcommand("generate", "Generate a connection pattern file");
  std::string gen_layers, gen_fan_outs, gen_plan, gen_out = "pattern.txt";
  std::uint64_t gen_seed = 0;
  generate->add_option("--layers", gen_layers, "Layer sizes, e.g. 8,4,4")->required();
  generate->add_option("--fan-outs", gen_fan_outs, "Per-junction fan-outs, e.g. 1,2")->required();
  generate->add_option("--seed", gen_seed, "Pattern seed")->required();
  generate->add_option("--plan", gen_plan,
                       "Windowed plan, e.g. src:1:blocked/rand (omit for random)");
  generate->add_option("--out", gen_out, "Output pattern file");

  // scatter
  auto* scatter_cmd = app.add_subcommand("scatter", "Scatter report for pattern files");
  std::vector<std::string> scatter_patterns;
  std::string scatter_out;
  scatter_cmd->add_option("--pattern", scatter_patterns, "Pattern file(s)")->required();
  scatter_cmd->add_option("--out", scatter_out, "Report CSV (default stdout)");

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a sparse net on a dataset");
  std::string train_pattern, train_checkpoint, train_report;
  DatasetArgs train_data;
  TrainConfig train_config;
  std::string train_optimizer = "sgd";
  train_cmd->add_option("--pattern", train_pattern, "Pattern file")->required();
  add_dataset_options(train_cmd, train_data);
  train_cmd->add_option("--optimizer", train_optimizer)->check(CLI::IsMember({"sgd", "adam"}));
  train_cmd->add_option("--lr", train_config.learning_rate);
  train_cmd->add_option("--epochs", train_config.epochs);
  train_cmd->add_option("--batch", train_config.batch_size);
  train_cmd->add_option("--l2", train_config.l2_coefficient);
  train_cmd->add_option("--seed", train_config.seed);
  train_cmd->add_option("--val-fraction", train_config.validation_fraction);
  train_cmd->add_option("--checkpoint", train_checkpoint, "Checkpoint output path");
  train_cmd->add_option("--report", train_report, "Per-epoch report CSV");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "Run an experiment sweep from a spec file");
  std::string sweep_spec_path;
  int sweep_jobs = 0;
  sweep_cmd->add_option("--spec", sweep_spec_path, "Sweep spec file")->required();
  sweep_cmd->add_option("--jobs", sweep_jobs, "Worker threads (default: hardware)");

  // morse-gen
  auto* morse_cmd = app.add_subcommand("morse-gen", "Write the synthesized Morse dataset as CSV");
  MorseGenSpec morse_spec;
  std::string morse_out = "morse.csv";
  morse_cmd->add_option("--samples-per-class", morse_spec.samples_per_class);
  morse_cmd->add_option("--noise", morse_spec.noise_sigma);
  morse_cmd->add_option("--max-shift", morse_spec.max_shift);
  morse_cmd->add_option("--seed", morse_spec.seed);
  morse_cmd->add_option("--out", morse_out, "Output CSV path");

  // gradcheck
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient verification");
  std::string grad_layers = "6,8,4", grad_fan_outs = "4,2", grad_pattern;
  std::uint64_t grad_seed = 7;
  int grad_samples = 5;
  double grad_tolerance = 1e-5;
  grad_cmd->add_option("--layers", grad_layers);
  grad_cmd->add_option("--fan-outs", grad_fan_outs);
  grad_cmd->add_option("--pattern", grad_pattern, "Check an existing pattern file instead");
  grad_cmd->add_option("--seed", grad_seed);
  grad_cmd->add_option("--samples", grad_samples);
  grad_cmd->add_option("--tolerance", grad_tolerance);

  // plot
  auto* plot_cmd = app.add_subcommand("plot", "Render a CSV as a simple SVG chart");
  std::string plot_csv, plot_x, plot_y, plot_out = "plot.svg", plot_kind = "points";
  plot_cmd->add_option("--csv", plot_csv)->required();
  plot_cmd->add_option("--x", plot_x)->required();
  plot_cmd->add_option("--y", plot_y)->required();
  plot_cmd->add_option("--out", plot_out);
  plot_cmd->add_option("--kind", plot_kind)->check(CLI::IsMember({"points", "line"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (generate->parsed()) {
      const NetworkTopology topology =
          make_topology(parse_index_list(gen_layers), parse_index_list(gen_fan_outs));
      ConnectionPattern pattern;
      if (gen_plan.empty()) {
        pattern = generate_random_pattern(topology, gen_seed);
      } else {
        pattern = generate_windowed_pattern(
            topology, parse_plan(gen_plan, topology.junction_count()), gen_seed);
      }
      save_pattern(pattern, gen_out);
      std::cerr << "wrote " << gen_out << "\n";
    } else if (scatter_cmd->parsed()) {
      std::ostream* out = &std::cout;
      std::ofstream file;
      if (!scatter_out.empty()) {
        file.open(scatter_out, std::ios::binary);
        if (!file) raise(ErrorCode::BadFormat, "cannot open " + scatter_out + " for writing");
        out = &file;
      }
      bool first = true;
      for (const std::string& path : scatter_patterns) {
        const ConnectionPattern pattern = load_pattern(path);
        write_scatter_row(*out, std::filesystem::path(path).stem().string(), pattern, first);
        first = false;
      }
    } else if (train_cmd->parsed()) {
      train_config.optimizer = optimizer_from_string(train_optimizer);
      const ConnectionPattern pattern = load_pattern(train_pattern);
      const Dataset dataset = load_dataset(train_data);
      auto [net, report] =
          train(init_net(pattern, derive_stream(train_config.seed, 0x696e6974ULL)), dataset,
                train_config);
      std::cout << "best_val_accuracy " << format_accuracy(report.best_val_accuracy) << "\n";
      std::cerr << "trained in " << report.wall_seconds << "s\n";
      if (!train_checkpoint.empty()) save_checkpoint(net, train_config, train_checkpoint);
      if (!train_report.empty()) {
        std::ofstream rep(train_report, std::ios::binary);
        if (!rep) raise(ErrorCode::BadFormat, "cannot open " + train_report + " for writing");
        rep << "epoch,train_loss,val_accuracy\n";
        for (std::size_t e = 0; e < report.train_loss.size(); ++e) {
          rep << (e + 1) << "," << format_fraction(report.train_loss[e]) << ","
              << format_accuracy(report.val_accuracy[e]) << "\n";
        }
      }
    } else if (sweep_cmd->parsed()) {
      const SweepSpec spec = parse_sweep_spec(sweep_spec_path);
      run_sweep(spec, sweep_jobs);
      std::cerr << "wrote " << spec.output_path << " and " << median_path(spec.output_path)
                << "\n";
    } else if (morse_cmd->parsed()) {
      write_dataset_csv(synthesize_morse(morse_spec), morse_out);
      std::cerr << "wrote " << morse_out << "\n";
    } else if (grad_cmd->parsed()) {
      ConnectionPattern pattern;
      if (!grad_pattern.empty()) {
        pattern = load_pattern(grad_pattern);
      } else {
        pattern = generate_random_pattern(
            make_topology(parse_index_list(grad_layers), parse_index_list(grad_fan_outs)),
            grad_seed);
      }
      const SparseNet net = init_net(pattern, derive_stream(grad_seed, 0x696e6974ULL));
      const GradCheckReport report = gradient_check(net, grad_samples, grad_tolerance);
      std::cout << "max_rel_error " << report.max_rel_error << " "
                << (report.pass ? "PASS" : "FAIL") << "\n";
      if (!report.pass) return 2;
    } else if (plot_cmd->parsed()) {
      write_svg_plot(plot_csv, plot_x, plot_y, plot_kind == "line", plot_out);
      std::cerr << "wrote " << plot_out << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace presparse
