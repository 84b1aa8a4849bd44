#include "presparse/net.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include "presparse/rng.hpp"

namespace presparse {

std::int64_t SparseNet::parameter_count() const {
  std::int64_t count = 0;
  for (const VecX& w : weights) count += w.size();
  for (const VecX& b : biases) count += b.size();
  return count;
}

SparseNet init_net(const ConnectionPattern& pattern, std::uint64_t seed) {
  SparseNet net;
  net.pattern = pattern;
  net.init_seed = seed;
  const Index junctions = pattern.topology.junction_count();
  net.row_offsets.resize(static_cast<std::size_t>(junctions));
  net.left_index.resize(static_cast<std::size_t>(junctions));
  net.weights.resize(static_cast<std::size_t>(junctions));
  net.biases.resize(static_cast<std::size_t>(junctions));

  for (Index j = 0; j < junctions; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    const JunctionSpec& spec = pattern.topology.junctions[ju];
    const AdjacencyMatrix& adjacency = pattern.adjacency[ju];
    auto& offsets = net.row_offsets[ju];
    auto& lefts = net.left_index[ju];
    offsets.assign(static_cast<std::size_t>(spec.n_right) + 1, 0);
    lefts.reserve(static_cast<std::size_t>(spec.weight_count));
    for (Index right = 0; right < spec.n_right; ++right) {
      for (Index left = 0; left < spec.n_left; ++left) {
        if (adjacency(right, left) != 0) lefts.push_back(left);
      }
      offsets[static_cast<std::size_t>(right) + 1] = static_cast<Index>(lefts.size());
    }

    const double bound = std::sqrt(6.0 / static_cast<double>(spec.fan_in + spec.fan_out));
    SplitMix64 rng(derive_stream(seed, static_cast<std::uint64_t>(j)));
    VecX& w = net.weights[ju];
    w.resize(static_cast<Index>(lefts.size()));
    for (Index e = 0; e < w.size(); ++e) w[e] = bound * (2.0 * rng.next_unit() - 1.0);
    net.biases[ju] = VecX::Zero(spec.n_right);
  }
  return net;
}

namespace {

// z = x * W^T + b over the junction's edges; columns are neurons, so each
// term is a contiguous axpy across the batch.
void junction_forward(const SparseNet& net, std::size_t j, const MatX& in, MatX& out) {
  const std::vector<Index>& offsets = net.row_offsets[j];
  const std::vector<Index>& lefts = net.left_index[j];
  const VecX& w = net.weights[j];
  const VecX& b = net.biases[j];
  const Index n_right = static_cast<Index>(offsets.size()) - 1;
  out.resize(in.rows(), n_right);
  for (Index right = 0; right < n_right; ++right) {
    auto column = out.col(right);
    column.setConstant(b[right]);
    for (Index e = offsets[static_cast<std::size_t>(right)];
         e < offsets[static_cast<std::size_t>(right) + 1]; ++e) {
      column.noalias() += w[e] * in.col(lefts[static_cast<std::size_t>(e)]);
    }
  }
}

void softmax_rows(MatX& z) {
  for (Index r = 0; r < z.rows(); ++r) {
    auto row = z.row(r);
    row = (row.array() - row.maxCoeff()).exp();
    row /= row.sum();
  }
}

}  // namespace

ForwardResult forward(const SparseNet& net, const MatX& batch) {
  if (batch.cols() != net.pattern.topology.input_size()) {
    raise(ErrorCode::DimensionMismatch, "batch width does not match the input layer");
  }
  ForwardResult result;
  const Index junctions = net.junction_count();
  result.activations.resize(static_cast<std::size_t>(junctions) + 1);
  result.activations[0] = batch;
  for (Index j = 0; j < junctions; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    MatX& z = result.activations[ju + 1];
    junction_forward(net, ju, result.activations[ju], z);
    if (j + 1 < junctions) {
      z = z.cwiseMax(0.0);  // ReLU on hidden layers
    } else {
      softmax_rows(z);
    }
  }
  return result;
}

LossGrads loss_and_gradients(const SparseNet& net, const MatX& batch,
                             const std::vector<int>& labels, double l2_coefficient) {
  const Index batch_size = batch.rows();
  if (static_cast<Index>(labels.size()) != batch_size) {
    raise(ErrorCode::DimensionMismatch, "one label per batch row required");
  }
  const int classes = static_cast<int>(net.pattern.topology.output_size());
  for (int label : labels) {
    if (label < 0 || label >= classes) {
      raise(ErrorCode::BadLabel, "label " + std::to_string(label) + " out of range");
    }
  }

  const ForwardResult fwd = forward(net, batch);
  const MatX& probabilities = fwd.probabilities();

  LossGrads result;
  for (Index r = 0; r < batch_size; ++r) {
    const double p = probabilities(r, labels[static_cast<std::size_t>(r)]);
    result.cross_entropy -= std::log(std::max(p, 1e-300));
  }
  result.cross_entropy /= static_cast<double>(batch_size);
  result.loss = result.cross_entropy;

  const Index junctions = net.junction_count();
  result.grads.weights.resize(static_cast<std::size_t>(junctions));
  result.grads.biases.resize(static_cast<std::size_t>(junctions));

  // dZ on the output layer: (P - onehot) / batch.
  MatX dz = probabilities;
  for (Index r = 0; r < batch_size; ++r) dz(r, labels[static_cast<std::size_t>(r)]) -= 1.0;
  dz /= static_cast<double>(batch_size);

  for (Index j = junctions - 1; j >= 0; --j) {
    const auto ju = static_cast<std::size_t>(j);
    const std::vector<Index>& offsets = net.row_offsets[ju];
    const std::vector<Index>& lefts = net.left_index[ju];
    const VecX& w = net.weights[ju];
    const MatX& in = fwd.activations[ju];

    VecX& wgrad = result.grads.weights[ju];
    wgrad.resize(w.size());
    result.grads.biases[ju] = dz.colwise().sum();

    const bool need_input_grad = j > 0;
    MatX din;
    if (need_input_grad) din.setZero(batch_size, in.cols());

    const Index n_right = static_cast<Index>(offsets.size()) - 1;
    for (Index right = 0; right < n_right; ++right) {
      const auto dz_col = dz.col(right);
      for (Index e = offsets[static_cast<std::size_t>(right)];
           e < offsets[static_cast<std::size_t>(right) + 1]; ++e) {
        const Index left = lefts[static_cast<std::size_t>(e)];
        wgrad[e] = dz_col.dot(in.col(left));
        if (need_input_grad) din.col(left).noalias() += w[e] * dz_col;
      }
    }
    if (l2_coefficient > 0) {
      result.loss += 0.5 * l2_coefficient * w.squaredNorm();
      wgrad.noalias() += l2_coefficient * w;
    }
    if (need_input_grad) {
      // Through the ReLU of the layer below.
      dz = ((in.array() > 0.0).cast<double>() * din.array()).matrix();
    }
  }
  return result;
}

namespace {

MatX gather_rows(const MatX& inputs, const std::vector<Index>& order, Index begin, Index end) {
  MatX out(end - begin, inputs.cols());
  for (Index r = begin; r < end; ++r) {
    out.row(r - begin) = inputs.row(order[static_cast<std::size_t>(r)]);
  }
  return out;
}

struct AdamState {
  std::vector<VecX> m_weights, v_weights, m_biases, v_biases;
  std::int64_t step = 0;

  explicit AdamState(const SparseNet& net) {
    for (const VecX& w : net.weights) {
      m_weights.push_back(VecX::Zero(w.size()));
      v_weights.push_back(VecX::Zero(w.size()));
    }
    for (const VecX& b : net.biases) {
      m_biases.push_back(VecX::Zero(b.size()));
      v_biases.push_back(VecX::Zero(b.size()));
    }
  }
};

void adam_update(VecX& param, const VecX& grad, VecX& m, VecX& v, const TrainConfig& config,
                 double bias1, double bias2) {
  m = config.adam_beta1 * m + (1.0 - config.adam_beta1) * grad;
  v = config.adam_beta2 * v + (1.0 - config.adam_beta2) * grad.cwiseProduct(grad);
  param.array() -= config.learning_rate * (m.array() / bias1) /
                   ((v.array() / bias2).sqrt() + config.adam_epsilon);
}

}  // namespace

const char* to_string(TrainConfig::Optimizer optimizer) {
  return optimizer == TrainConfig::Optimizer::sgd ? "sgd" : "adam";
}

TrainConfig::Optimizer optimizer_from_string(const std::string& text) {
  if (text == "sgd") return TrainConfig::Optimizer::sgd;
  if (text == "adam") return TrainConfig::Optimizer::adam;
  raise(ErrorCode::BadFormat, "unknown optimizer '" + text + "'");
}

std::pair<SparseNet, TrainReport> train(SparseNet net, const Dataset& dataset,
                                        const TrainConfig& config) {
  if (dataset.size() == 0) raise(ErrorCode::EmptyDataset, "cannot train on an empty dataset");
  if (config.adam_beta1 <= 0 || config.adam_beta1 >= 1 || config.adam_beta2 <= 0 ||
      config.adam_beta2 >= 1) {
    raise(ErrorCode::BadFormat, "adam betas must lie in (0, 1)");
  }
  if (config.batch_size <= 0 || config.epochs < 0) {
    raise(ErrorCode::BadFormat, "batch_size must be positive and epochs non-negative");
  }

  const auto start = std::chrono::steady_clock::now();
  auto [train_split, val_split] =
      split(dataset, config.validation_fraction, derive_stream(config.seed, 0x73706c6974ULL));
  const Dataset& scored = val_split.size() > 0 ? val_split : train_split;

  TrainReport report;
  report.train_loss.reserve(static_cast<std::size_t>(config.epochs));
  report.val_accuracy.reserve(static_cast<std::size_t>(config.epochs));

  AdamState adam(net);
  SplitMix64 shuffle_rng(derive_stream(config.seed, 0x73687566ULL));
  std::vector<Index> order(static_cast<std::size_t>(train_split.size()));
  std::iota(order.begin(), order.end(), Index{0});

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_ce = 0;
    for (Index begin = 0; begin < train_split.size(); begin += config.batch_size) {
      const Index end = std::min<Index>(begin + config.batch_size, train_split.size());
      const MatX batch = gather_rows(train_split.inputs, order, begin, end);
      std::vector<int> labels(static_cast<std::size_t>(end - begin));
      for (Index r = begin; r < end; ++r) {
        labels[static_cast<std::size_t>(r - begin)] =
            train_split.labels[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])];
      }
      const LossGrads lg = loss_and_gradients(net, batch, labels, config.l2_coefficient);
      epoch_ce += lg.cross_entropy * static_cast<double>(end - begin);

      if (config.optimizer == TrainConfig::Optimizer::sgd) {
        for (Index j = 0; j < net.junction_count(); ++j) {
          const auto ju = static_cast<std::size_t>(j);
          net.weights[ju].noalias() -= config.learning_rate * lg.grads.weights[ju];
          net.biases[ju].noalias() -= config.learning_rate * lg.grads.biases[ju];
        }
      } else {
        adam.step += 1;
        const double bias1 = 1.0 - std::pow(config.adam_beta1, static_cast<double>(adam.step));
        const double bias2 = 1.0 - std::pow(config.adam_beta2, static_cast<double>(adam.step));
        for (Index j = 0; j < net.junction_count(); ++j) {
          const auto ju = static_cast<std::size_t>(j);
          adam_update(net.weights[ju], lg.grads.weights[ju], adam.m_weights[ju],
                      adam.v_weights[ju], config, bias1, bias2);
          adam_update(net.biases[ju], lg.grads.biases[ju], adam.m_biases[ju], adam.v_biases[ju],
                      config, bias1, bias2);
        }
      }
    }
    report.train_loss.push_back(epoch_ce / static_cast<double>(train_split.size()));
    report.val_accuracy.push_back(evaluate(net, scored));
  }
  report.best_val_accuracy =
      report.val_accuracy.empty()
          ? evaluate(net, scored)
          : *std::max_element(report.val_accuracy.begin(), report.val_accuracy.end());
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::move(net), std::move(report)};
}

double evaluate(const SparseNet& net, const Dataset& dataset) {
  if (dataset.size() == 0) raise(ErrorCode::EmptyDataset, "cannot evaluate an empty dataset");
  const Index chunk = 512;
  Index correct = 0;
  for (Index begin = 0; begin < dataset.size(); begin += chunk) {
    const Index end = std::min<Index>(begin + chunk, dataset.size());
    const ForwardResult fwd = forward(net, dataset.inputs.middleRows(begin, end - begin));
    const MatX& probabilities = fwd.probabilities();
    for (Index r = 0; r < probabilities.rows(); ++r) {
      Index best = 0;
      for (Index c = 1; c < probabilities.cols(); ++c) {
        if (probabilities(r, c) > probabilities(r, best)) best = c;
      }
      if (best == dataset.labels[static_cast<std::size_t>(begin + r)]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

GradCheckReport gradient_check(const SparseNet& net, int n_samples, double tolerance,
                               std::uint64_t seed) {
  SplitMix64 rng(seed);
  const Index dimension = net.pattern.topology.input_size();
  const int classes = static_cast<int>(net.pattern.topology.output_size());
  MatX batch(n_samples, dimension);
  for (Index r = 0; r < batch.rows(); ++r) {
    for (Index c = 0; c < dimension; ++c) batch(r, c) = rng.next_unit();
  }
  std::vector<int> labels(static_cast<std::size_t>(n_samples));
  for (int& label : labels) {
    label = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(classes)));
  }

  SparseNet probe = net;
  const LossGrads analytic = loss_and_gradients(probe, batch, labels, 0.0);
  const double step = 1e-5;
  double max_rel_error = 0;

  auto check_param = [&](double& param, double analytic_grad) {
    const double saved = param;
    param = saved + step;
    const double above = loss_and_gradients(probe, batch, labels, 0.0).loss;
    param = saved - step;
    const double below = loss_and_gradients(probe, batch, labels, 0.0).loss;
    param = saved;
    const double numeric = (above - below) / (2.0 * step);
    const double denom = std::max({std::abs(analytic_grad), std::abs(numeric), 1.0});
    max_rel_error = std::max(max_rel_error, std::abs(analytic_grad - numeric) / denom);
  };

  for (Index j = 0; j < probe.junction_count(); ++j) {
    const auto ju = static_cast<std::size_t>(j);
    for (Index e = 0; e < probe.weights[ju].size(); ++e) {
      check_param(probe.weights[ju][e], analytic.grads.weights[ju][e]);
    }
    for (Index b = 0; b < probe.biases[ju].size(); ++b) {
      check_param(probe.biases[ju][b], analytic.grads.biases[ju][b]);
    }
  }

  GradCheckReport report;
  report.max_rel_error = max_rel_error;
  report.pass = max_rel_error <= tolerance;
  return report;
}

}  // namespace presparse
