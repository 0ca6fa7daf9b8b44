#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "navshift/expert.hpp"
#include "navshift/representation.hpp"

namespace navshift {

// Fully-connected net: rectifier on hidden layers, identity on the output.
// weights[l] is row-major layer_dims[l+1] x layer_dims[l].
struct PolicyNet {
  std::vector<int> layer_dims;  // [feature_len, hidden..., 3]
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  int n_layers() const { return static_cast<int>(layer_dims.size()) - 1; }
  std::size_t param_count() const;
};

struct Gradients {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;
};

Gradients zero_gradients(const PolicyNet& net);

// Uniform +-sqrt(6 / fan_in) weights, zero biases; output layer must be 3.
PolicyNet init_policy(const std::vector<int>& layer_dims, std::uint64_t seed);

std::vector<double> forward(const PolicyNet& net, const std::vector<double>& x);

using LabeledBatch = std::vector<std::pair<std::vector<double>, Action>>;

// Mean cross-entropy over the batch and its analytic gradient.
// Throws StageError when the loss is not finite.
std::pair<double, Gradients> loss_and_grad(const PolicyNet& net, const LabeledBatch& batch);

struct AdamWParams {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;
};

struct OptimizerState {
  AdamWParams params;
  std::vector<std::vector<double>> m_w, v_w, m_b, v_b;
  long step = 0;
  double beta1_pow = 1.0;  // beta1^step, tracked multiplicatively
  double beta2_pow = 1.0;

  static OptimizerState init(const PolicyNet& net, const AdamWParams& params);
};

// Bias-corrected adaptive moment update; weight decay decoupled
// (parameter *= 1 - lr * weight_decay, separate from the gradient term).
void adamw_step(PolicyNet& net, const Gradients& grads, OptimizerState& state);

// Argmax over logits; ties resolve to the lowest action index.
Action predict_action(const PolicyNet& net, const std::vector<double>& features);

struct TrainConfig {
  std::vector<int> hidden_dims{128, 64};
  int epochs = 10;
  int batch_size = 200;
  double lr = 1e-3;
  double weight_decay = 1e-4;
  double val_fraction = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainReport {
  std::vector<double> epoch_loss;      // mean training loss per epoch
  std::vector<double> epoch_accuracy;  // training action accuracy per epoch
  double val_accuracy = -1.0;          // -1 when val_fraction rounds to zero
  int n_train = 0;
  int n_val = 0;
  double wall_clock_sec = 0.0;
  std::uint64_t seed = 0;
};

// Behavior cloning on a prepared feature matrix.  Deterministic under
// (features, labels, cfg): seeded shuffles, serial accumulation.
std::pair<PolicyNet, TrainReport> train_policy(const std::vector<std::vector<double>>& features,
                                               const std::vector<Action>& labels,
                                               const TrainConfig& cfg);

// Convenience wrapper: extract features from a demo dataset, then train.
std::pair<PolicyNet, TrainReport> train(const DemoDataset& dataset, const ChannelSet& channels,
                                        const ExtractionContext& ctx, const TrainConfig& cfg);

// Checkpoint JSON: {layer_dims, channels, params, seed, config}.
std::string checkpoint_to_json(const PolicyNet& net, const ChannelSet& channels,
                               const TrainConfig& cfg);
struct Checkpoint {
  PolicyNet net;
  ChannelSet channels;
  TrainConfig config;
};
Checkpoint checkpoint_from_json(const std::string& text);

}  // namespace navshift
