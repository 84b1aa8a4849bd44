#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "presparse/net.hpp"
#include "presparse/rng.hpp"

using namespace presparse;

namespace {

MatX random_batch(Index rows, Index cols, std::uint64_t seed) {
  SplitMix64 rng(seed);
  MatX batch(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) batch(r, c) = rng.next_unit();
  }
  return batch;
}

std::vector<int> random_labels(Index count, int classes, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<int> labels(static_cast<std::size_t>(count));
  for (int& label : labels) {
    label = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(classes)));
  }
  return labels;
}

double relative_gap(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1.0});
}

// Synthetic blobs: class c clusters around corner patterns of the input cube.
Dataset blob_dataset(Index dimension, int classes, int per_class, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Dataset dataset;
  dataset.name = "blobs";
  dataset.class_count = classes;
  dataset.inputs.resize(static_cast<Index>(classes) * per_class, dimension);
  Index row = 0;
  for (int c = 0; c < classes; ++c) {
    for (int s = 0; s < per_class; ++s, ++row) {
      for (Index d = 0; d < dimension; ++d) {
        const double center = ((c >> (d % 4)) & 1) ? 0.8 : 0.2;
        dataset.inputs(row, d) = center + 0.08 * rng.next_gaussian();
      }
      dataset.labels.push_back(c);
    }
  }
  return dataset;
}

}  // namespace

TEST_CASE("init is deterministic, bounded, and centered") {
  const NetworkTopology topology = make_topology({256, 128, 8}, {64, 8});
  const ConnectionPattern pattern = generate_random_pattern(topology, 11);
  const SparseNet a = init_net(pattern, 5);
  const SparseNet b = init_net(pattern, 5);
  const SparseNet c = init_net(pattern, 6);
  CHECK(a.weights[0] == b.weights[0]);
  CHECK(a.weights[1] == b.weights[1]);
  CHECK(a.weights[0] != c.weights[0]);
  CHECK(a.biases[0].cwiseAbs().maxCoeff() == 0.0);

  // 256*64 = 16384 samples: the mean should sit within 3 standard errors.
  const JunctionSpec& spec = topology.junctions[0];
  const double bound = std::sqrt(6.0 / static_cast<double>(spec.fan_in + spec.fan_out));
  CHECK(a.weights[0].cwiseAbs().maxCoeff() <= bound);
  const double stderr_mean = (bound / std::sqrt(3.0)) / std::sqrt(16384.0);
  CHECK(std::abs(a.weights[0].mean()) < 3 * stderr_mean);

  CHECK(a.parameter_count() == 16384 + 1024 + 128 + 8);
}

TEST_CASE("zeroed nets emit uniform probabilities") {
  const NetworkTopology topology = make_topology({6, 8, 4}, {4, 2});
  SparseNet net = init_net(generate_random_pattern(topology, 2), 3);
  for (VecX& w : net.weights) w.setZero();
  const ForwardResult result = forward(net, random_batch(5, 6, 1));
  CHECK(result.probabilities().rows() == 5);
  for (Index r = 0; r < 5; ++r) {
    for (Index c = 0; c < 4; ++c) CHECK(result.probabilities()(r, c) == 0.25);
  }
  CHECK_THROWS_WITH_AS(forward(net, random_batch(5, 7, 1)),
                       doctest::Contains("DimensionMismatch"), Error);
}

TEST_CASE("softmax rows are normalized") {
  const NetworkTopology topology = make_topology({12, 10, 6}, {5, 3});
  const SparseNet net = init_net(generate_random_pattern(topology, 7), 8);
  const ForwardResult result = forward(net, random_batch(64, 12, 9));
  for (Index r = 0; r < 64; ++r) {
    CHECK(std::abs(result.probabilities().row(r).sum() - 1.0) < 1e-9);
  }
}

TEST_CASE("sparse forward matches the masked dense reference") {
  SplitMix64 rng(404);
  for (int trial = 0; trial < 10; ++trial) {
    const NetworkTopology topology = make_topology({12, 8, 4}, {2, 2});
    const SparseNet net = init_net(generate_random_pattern(topology, rng.next()), rng.next());
    const testing::DenseReference dense(net);
    const MatX batch = random_batch(7, 12, rng.next());
    const ForwardResult sparse = forward(net, batch);
    const std::vector<MatX> reference = dense.forward(batch);
    for (std::size_t layer = 0; layer < reference.size(); ++layer) {
      const double gap = (sparse.activations[layer] - reference[layer]).cwiseAbs().maxCoeff();
      CHECK(gap <= 1e-12);
    }
  }
}

TEST_CASE("fully connected nets match the dense reference too") {
  const NetworkTopology topology = make_topology({9, 5, 3}, {5, 3});
  const SparseNet net = init_net(generate_random_pattern(topology, 31), 32);
  const testing::DenseReference dense(net);
  const MatX batch = random_batch(11, 9, 33);
  const double gap =
      (forward(net, batch).probabilities() - dense.forward(batch).back()).cwiseAbs().maxCoeff();
  CHECK(gap <= 1e-12);
}

TEST_CASE("gradients match the dense reference on existing edges") {
  SplitMix64 rng(505);
  for (int trial = 0; trial < 6; ++trial) {
    const NetworkTopology topology = make_topology({10, 6, 4}, {3, 2});
    const SparseNet net = init_net(generate_random_pattern(topology, rng.next()), rng.next());
    const testing::DenseReference dense(net);
    const MatX batch = random_batch(9, 10, rng.next());
    const std::vector<int> labels = random_labels(9, 4, rng.next());
    const LossGrads sparse = loss_and_gradients(net, batch, labels, 0.0);
    const testing::DenseReference::Grads reference = dense.backward(batch, labels);
    for (Index j = 0; j < net.junction_count(); ++j) {
      const auto ju = static_cast<std::size_t>(j);
      for (Index right = 0; right < net.pattern.topology.junctions[ju].n_right; ++right) {
        for (Index e = net.row_offsets[ju][static_cast<std::size_t>(right)];
             e < net.row_offsets[ju][static_cast<std::size_t>(right) + 1]; ++e) {
          const Index left = net.left_index[ju][static_cast<std::size_t>(e)];
          CHECK(relative_gap(sparse.grads.weights[ju][e], reference.weights[ju](right, left)) <=
                1e-12);
        }
      }
      const double bias_gap =
          (sparse.grads.biases[ju] - reference.biases[ju]).cwiseAbs().maxCoeff();
      CHECK(bias_gap <= 1e-12);
    }
  }
}

TEST_CASE("uniform outputs cost ln(C)") {
  const NetworkTopology topology = make_topology({6, 8, 4}, {4, 2});
  SparseNet net = init_net(generate_random_pattern(topology, 2), 3);
  for (VecX& w : net.weights) w.setZero();
  const MatX batch = random_batch(8, 6, 4);
  const LossGrads lg = loss_and_gradients(net, batch, random_labels(8, 4, 5), 0.0);
  CHECK(lg.loss == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  CHECK(lg.cross_entropy == lg.loss);
}

TEST_CASE("with zero data signal the weight gradient is exactly l2 * w") {
  const NetworkTopology topology = make_topology({6, 8, 4}, {4, 2});
  const SparseNet net = init_net(generate_random_pattern(topology, 12), 13);
  const MatX zero_batch = MatX::Zero(4, 6);
  const LossGrads lg = loss_and_gradients(net, zero_batch, {0, 1, 2, 3}, 0.01);
  for (Index j = 0; j < net.junction_count(); ++j) {
    const auto ju = static_cast<std::size_t>(j);
    CHECK(lg.grads.weights[ju] == 0.01 * net.weights[ju]);
  }
}

TEST_CASE("labels outside the class range are rejected") {
  const NetworkTopology topology = make_topology({6, 8, 4}, {4, 2});
  const SparseNet net = init_net(generate_random_pattern(topology, 2), 3);
  const MatX batch = random_batch(2, 6, 4);
  CHECK_THROWS_WITH_AS(loss_and_gradients(net, batch, {0, 4}, 0.0),
                       doctest::Contains("BadLabel"), Error);
  CHECK_THROWS_WITH_AS(loss_and_gradients(net, batch, {0}, 0.0),
                       doctest::Contains("DimensionMismatch"), Error);
}

TEST_CASE("analytic gradients agree with central differences") {
  const NetworkTopology sparse_topology = make_topology({6, 8, 4}, {4, 2});
  const SparseNet sparse_net = init_net(generate_random_pattern(sparse_topology, 21), 22);
  const GradCheckReport sparse_report = gradient_check(sparse_net, 5, 1e-5);
  CHECK(sparse_report.pass);
  CHECK(sparse_report.max_rel_error <= 1e-5);

  const NetworkTopology fcl_topology = make_topology({6, 8, 4}, {8, 4});
  const SparseNet fcl_net = init_net(generate_random_pattern(fcl_topology, 23), 24);
  CHECK(gradient_check(fcl_net, 5, 1e-5).pass);
}

TEST_CASE("a corrupted gradient fails the finite-difference comparison") {
  const NetworkTopology topology = make_topology({6, 8, 4}, {4, 2});
  SparseNet net = init_net(generate_random_pattern(topology, 31), 32);
  const MatX batch = random_batch(5, 6, 33);
  const std::vector<int> labels = random_labels(5, 4, 34);
  const LossGrads lg = loss_and_gradients(net, batch, labels, 0.0);

  // Flip the sign of the largest weight gradient and redo the comparison.
  Index worst = 0;
  lg.grads.weights[0].cwiseAbs().maxCoeff(&worst);
  const double corrupted = -lg.grads.weights[0][worst];
  const double step = 1e-5;
  const double saved = net.weights[0][worst];
  net.weights[0][worst] = saved + step;
  const double above = loss_and_gradients(net, batch, labels, 0.0).loss;
  net.weights[0][worst] = saved - step;
  const double below = loss_and_gradients(net, batch, labels, 0.0).loss;
  net.weights[0][worst] = saved;
  const double numeric = (above - below) / (2 * step);
  CHECK(relative_gap(corrupted, numeric) > 1e-5);
}

TEST_CASE("training with zero learning rate changes nothing") {
  const Dataset dataset = blob_dataset(8, 4, 20, 71);
  const NetworkTopology topology = make_topology({8, 8, 4}, {4, 2});
  const SparseNet net = init_net(generate_random_pattern(topology, 41), 42);
  TrainConfig config;
  config.learning_rate = 0.0;
  config.epochs = 3;
  config.seed = 7;
  const double init_accuracy = evaluate(net, dataset);
  auto [trained, report] = train(net, dataset, config);
  CHECK(trained.weights[0] == net.weights[0]);
  CHECK(trained.biases[1] == net.biases[1]);
  auto [t2, r2] = train(net, dataset, config);
  CHECK(report.val_accuracy == r2.val_accuracy);
  CHECK(evaluate(trained, dataset) == init_accuracy);
}

TEST_CASE("training is deterministic in (pattern, config, dataset, seed)") {
  const Dataset dataset = blob_dataset(8, 4, 15, 72);
  const NetworkTopology topology = make_topology({8, 8, 4}, {4, 2});
  const ConnectionPattern pattern = generate_random_pattern(topology, 51);
  TrainConfig config;
  config.optimizer = TrainConfig::Optimizer::adam;
  config.learning_rate = 1e-3;
  config.epochs = 4;
  config.batch_size = 16;
  config.seed = 99;
  auto [net_a, report_a] = train(init_net(pattern, 1), dataset, config);
  auto [net_b, report_b] = train(init_net(pattern, 1), dataset, config);
  CHECK(net_a.weights[0] == net_b.weights[0]);
  CHECK(net_a.weights[1] == net_b.weights[1]);
  CHECK(report_a.train_loss == report_b.train_loss);
  CHECK(report_a.val_accuracy == report_b.val_accuracy);
  CHECK(report_a.best_val_accuracy == report_b.best_val_accuracy);
}

TEST_CASE("one small sgd step lowers the batch loss") {
  const NetworkTopology topology = make_topology({8, 8, 4}, {4, 2});
  SparseNet net = init_net(generate_random_pattern(topology, 61), 62);
  const MatX batch = random_batch(16, 8, 63);
  const std::vector<int> labels = random_labels(16, 4, 64);
  const LossGrads before = loss_and_gradients(net, batch, labels, 0.0);
  const double lr = 0.05;
  for (Index j = 0; j < net.junction_count(); ++j) {
    const auto ju = static_cast<std::size_t>(j);
    net.weights[ju] -= lr * before.grads.weights[ju];
    net.biases[ju] -= lr * before.grads.biases[ju];
  }
  const LossGrads after = loss_and_gradients(net, batch, labels, 0.0);
  CHECK(after.loss < before.loss);
}

TEST_CASE("training learns separable blobs") {
  const Dataset dataset = blob_dataset(8, 4, 40, 73);
  const NetworkTopology topology = make_topology({8, 16, 4}, {8, 2});
  TrainConfig config;
  config.optimizer = TrainConfig::Optimizer::adam;
  config.learning_rate = 1e-2;
  config.epochs = 60;
  config.batch_size = 32;
  config.seed = 5;
  config.validation_fraction = 0.25;
  auto [net, report] = train(init_net(generate_random_pattern(topology, 71), 72), dataset, config);
  CHECK(report.best_val_accuracy > 0.9);
  CHECK(report.train_loss.front() > report.train_loss.back());
  CHECK(static_cast<int>(report.train_loss.size()) == config.epochs);
}

TEST_CASE("evaluate counts argmax hits with ties to the lowest class") {
  MorseGenSpec spec;
  spec.samples_per_class = 4;
  spec.noise_sigma = 0;
  spec.max_shift = 0;
  const Dataset dataset = synthesize_morse(spec);
  const NetworkTopology topology = make_topology({64, 8, 64}, {1, 64});
  SparseNet net = init_net(generate_random_pattern(topology, 81), 82);
  for (VecX& w : net.weights) w.setZero();  // uniform output, every argmax ties to class 0
  CHECK(evaluate(net, dataset) == 1.0 / 64);

  Dataset single;
  single.class_count = 64;
  single.inputs = dataset.inputs.topRows(1);
  single.labels = {0};
  single.name = "one";
  CHECK(evaluate(net, single) == 1.0);
  single.labels = {5};
  CHECK(evaluate(net, single) == 0.0);

  Dataset empty;
  empty.class_count = 2;
  CHECK_THROWS_WITH_AS(evaluate(net, empty), doctest::Contains("EmptyDataset"), Error);
}
