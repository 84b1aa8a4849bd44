#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "presparse/datasets.hpp"
#include "presparse/topology.hpp"
#include "presparse/types.hpp"

namespace presparse {

/// Sparse multilayer perceptron over a fixed connection pattern. Per junction
/// the weights sit in canonical edge order (right neuron major, left neuron
/// minor), addressed CSR-style by right neuron; absent edges have no storage.
/// Hidden layers are ReLU, the output layer softmax.
struct SparseNet {
  ConnectionPattern pattern;
  // row_offsets[j] has n_right+1 entries; edge e of right neuron r lives at
  // [row_offsets[j][r], row_offsets[j][r+1]) in left_index[j] and weights[j].
  std::vector<std::vector<Index>> row_offsets;
  std::vector<std::vector<Index>> left_index;
  std::vector<VecX> weights;
  std::vector<VecX> biases;
  std::uint64_t init_seed = 0;

  Index junction_count() const { return pattern.topology.junction_count(); }
  std::int64_t parameter_count() const;
};

/// Fan-balanced uniform init: junction i draws weights from
/// [-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))] using stream
/// derive_stream(seed, i); biases start at zero.
SparseNet init_net(const ConnectionPattern& pattern, std::uint64_t seed);

/// Per-layer activations of a batch (rows = samples). activations[0] is the
/// input, the last entry holds softmax probabilities.
struct ForwardResult {
  std::vector<MatX> activations;

  const MatX& probabilities() const { return activations.back(); }
};

ForwardResult forward(const SparseNet& net, const MatX& batch);

struct Gradients {
  std::vector<VecX> weights;
  std::vector<VecX> biases;
};

struct LossGrads {
  double loss = 0;           // mean cross-entropy plus L2 penalty
  double cross_entropy = 0;  // data term alone
  Gradients grads;
};

/// Mean cross-entropy with (l2/2)*sum(w^2) penalty on weights (biases are not
/// penalized). Gradients flow only along existing edges and accumulate in
/// canonical edge order.
LossGrads loss_and_gradients(const SparseNet& net, const MatX& batch,
                             const std::vector<int>& labels, double l2_coefficient);

struct TrainConfig {
  enum class Optimizer { sgd, adam };
  Optimizer optimizer = Optimizer::sgd;
  double learning_rate = 0.1;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double l2_coefficient = 0.0;
  int batch_size = 128;
  int epochs = 30;
  std::uint64_t seed = 0;
  double validation_fraction = 0.2;
};

TrainConfig::Optimizer optimizer_from_string(const std::string& text);
const char* to_string(TrainConfig::Optimizer optimizer);

struct TrainReport {
  std::vector<double> train_loss;    // per-epoch mean cross-entropy
  std::vector<double> val_accuracy;  // per-epoch
  double best_val_accuracy = 0;
  double wall_seconds = 0;
};

/// One epoch is a full deterministic-shuffled pass in mini-batches. The
/// dataset is split internally (stratified, seeded); with a zero validation
/// fraction the accuracy column is measured on the training split.
std::pair<SparseNet, TrainReport> train(SparseNet net, const Dataset& dataset,
                                        const TrainConfig& config);

/// Fraction of samples whose argmax output matches the label; ties resolve to
/// the lowest class index.
double evaluate(const SparseNet& net, const Dataset& dataset);

struct GradCheckReport {
  double max_rel_error = 0;
  bool pass = false;
};

/// Central-difference check of every weight and bias gradient on a random
/// batch. Relative error uses a unit floor in the denominator.
GradCheckReport gradient_check(const SparseNet& net, int n_samples, double tolerance,
                               std::uint64_t seed = 0x67726164ULL);

}  // namespace presparse
