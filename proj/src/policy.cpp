#include "navshift/policy.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "json.hpp"

namespace navshift {
namespace {

// Forward/backward workspace reused across samples to avoid allocation in
// the training inner loop.
struct Workspace {
  std::vector<std::vector<double>> pre;   // pre-activation per layer
  std::vector<std::vector<double>> post;  // rectified activation per layer
  std::vector<std::vector<double>> delta;

  explicit Workspace(const PolicyNet& net) {
    const int L = net.n_layers();
    pre.resize(static_cast<std::size_t>(L));
    post.resize(static_cast<std::size_t>(L));
    delta.resize(static_cast<std::size_t>(L));
    for (int l = 0; l < L; ++l) {
      const auto n = static_cast<std::size_t>(net.layer_dims[static_cast<std::size_t>(l) + 1]);
      pre[static_cast<std::size_t>(l)].resize(n);
      post[static_cast<std::size_t>(l)].resize(n);
      delta[static_cast<std::size_t>(l)].resize(n);
    }
  }
};

void forward_into(const PolicyNet& net, const double* x, Workspace& ws) {
  const int L = net.n_layers();
  const double* in = x;
  for (int l = 0; l < L; ++l) {
    const auto lu = static_cast<std::size_t>(l);
    const int n_in = net.layer_dims[lu];
    const int n_out = net.layer_dims[lu + 1];
    const double* w = net.weights[lu].data();
    for (int j = 0; j < n_out; ++j) {
      const double* row = w + static_cast<std::size_t>(j) * n_in;
      double acc = net.biases[lu][static_cast<std::size_t>(j)];
      for (int i = 0; i < n_in; ++i) acc += row[i] * in[i];
      ws.pre[lu][static_cast<std::size_t>(j)] = acc;
    }
    if (l + 1 < L) {
      for (int j = 0; j < n_out; ++j)
        ws.post[lu][static_cast<std::size_t>(j)] =
            ws.pre[lu][static_cast<std::size_t>(j)] > 0.0
                ? ws.pre[lu][static_cast<std::size_t>(j)]
                : 0.0;
      in = ws.post[lu].data();
    }
  }
}

// Cross-entropy of the last forward pass; fills the output delta.
double sample_loss_delta(const PolicyNet& net, int label, Workspace& ws, bool& correct) {
  const auto L = static_cast<std::size_t>(net.n_layers());
  const auto& z = ws.pre[L - 1];
  double zmax = z[0];
  int argmax = 0;
  for (int k = 1; k < 3; ++k)
    if (z[static_cast<std::size_t>(k)] > zmax) {
      zmax = z[static_cast<std::size_t>(k)];
      argmax = k;
    }
  double sum = 0.0;
  for (int k = 0; k < 3; ++k) sum += std::exp(z[static_cast<std::size_t>(k)] - zmax);
  const double lse = zmax + std::log(sum);
  for (int k = 0; k < 3; ++k)
    ws.delta[L - 1][static_cast<std::size_t>(k)] =
        std::exp(z[static_cast<std::size_t>(k)] - lse) - (k == label ? 1.0 : 0.0);
  correct = argmax == label;
  return lse - z[static_cast<std::size_t>(label)];
}

void backward_accumulate(const PolicyNet& net, const double* x, Workspace& ws,
                         Gradients& grads) {
  const int L = net.n_layers();
  for (int l = L - 1; l >= 0; --l) {
    const auto lu = static_cast<std::size_t>(l);
    const int n_in = net.layer_dims[lu];
    const int n_out = net.layer_dims[lu + 1];
    const double* a = l == 0 ? x : ws.post[lu - 1].data();
    double* dw = grads.weights[lu].data();
    for (int j = 0; j < n_out; ++j) {
      const double d = ws.delta[lu][static_cast<std::size_t>(j)];
      if (d == 0.0) continue;
      double* row = dw + static_cast<std::size_t>(j) * n_in;
      for (int i = 0; i < n_in; ++i) row[i] += d * a[i];
      grads.biases[lu][static_cast<std::size_t>(j)] += d;
    }
    if (l > 0) {
      auto& dprev = ws.delta[lu - 1];
      std::fill(dprev.begin(), dprev.end(), 0.0);
      const double* w = net.weights[lu].data();
      for (int j = 0; j < n_out; ++j) {
        const double d = ws.delta[lu][static_cast<std::size_t>(j)];
        if (d == 0.0) continue;
        const double* row = w + static_cast<std::size_t>(j) * n_in;
        for (int i = 0; i < n_in; ++i) dprev[static_cast<std::size_t>(i)] += d * row[i];
      }
      // rectifier gate
      for (int i = 0; i < n_in; ++i)
        if (ws.pre[lu - 1][static_cast<std::size_t>(i)] <= 0.0)
          dprev[static_cast<std::size_t>(i)] = 0.0;
    }
  }
}

struct BatchStats {
  double loss = 0.0;  // mean
  int correct = 0;
};

// Mean loss/grads over the index slice of a feature matrix.
BatchStats batch_loss_grad(const PolicyNet& net,
                           const std::vector<std::vector<double>>& X,
                           const std::vector<Action>& y,
                           const int* idx, int count, Workspace& ws, Gradients& grads) {
  for (auto& g : grads.weights) std::fill(g.begin(), g.end(), 0.0);
  for (auto& g : grads.biases) std::fill(g.begin(), g.end(), 0.0);
  double loss_sum = 0.0;
  BatchStats stats;
  for (int s = 0; s < count; ++s) {
    const auto i = static_cast<std::size_t>(idx[s]);
    forward_into(net, X[i].data(), ws);
    bool correct = false;
    loss_sum += sample_loss_delta(net, static_cast<int>(y[i]), ws, correct);
    stats.correct += correct;
    backward_accumulate(net, X[i].data(), ws, grads);
  }
  const double inv = 1.0 / count;
  for (auto& g : grads.weights)
    for (double& v : g) v *= inv;
  for (auto& g : grads.biases)
    for (double& v : g) v *= inv;
  stats.loss = loss_sum * inv;
  return stats;
}

void check_dims(const std::vector<int>& dims) {
  if (dims.size() < 2) throw ConfigError("policy: need at least input and output dims");
  for (int d : dims)
    if (d < 1) throw ConfigError("policy: layer dims must be positive");
  if (dims.back() != 3) throw ConfigError("policy: output dim must be 3 (action count)");
}

}  // namespace

std::size_t PolicyNet::param_count() const {
  std::size_t n = 0;
  for (int l = 0; l < n_layers(); ++l)
    n += weights[static_cast<std::size_t>(l)].size() + biases[static_cast<std::size_t>(l)].size();
  return n;
}

Gradients zero_gradients(const PolicyNet& net) {
  Gradients g;
  for (int l = 0; l < net.n_layers(); ++l) {
    g.weights.emplace_back(net.weights[static_cast<std::size_t>(l)].size(), 0.0);
    g.biases.emplace_back(net.biases[static_cast<std::size_t>(l)].size(), 0.0);
  }
  return g;
}

PolicyNet init_policy(const std::vector<int>& layer_dims, std::uint64_t seed) {
  check_dims(layer_dims);
  PolicyNet net;
  net.layer_dims = layer_dims;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    const auto fan_in = static_cast<std::size_t>(layer_dims[l]);
    const auto fan_out = static_cast<std::size_t>(layer_dims[l + 1]);
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::vector<double> w(fan_out * fan_in);
    for (double& v : w) v = rng.uniform(-bound, bound);
    net.weights.push_back(std::move(w));
    net.biases.emplace_back(fan_out, 0.0);
  }
  return net;
}

std::vector<double> forward(const PolicyNet& net, const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != net.layer_dims.front())
    throw std::invalid_argument("forward: feature length mismatch");
  Workspace ws(net);
  forward_into(net, x.data(), ws);
  return ws.pre[static_cast<std::size_t>(net.n_layers()) - 1];
}

std::pair<double, Gradients> loss_and_grad(const PolicyNet& net, const LabeledBatch& batch) {
  if (batch.empty()) throw std::invalid_argument("loss_and_grad: empty batch");
  std::vector<std::vector<double>> X;
  std::vector<Action> y;
  X.reserve(batch.size());
  y.reserve(batch.size());
  for (const auto& [f, a] : batch) {
    if (static_cast<int>(f.size()) != net.layer_dims.front())
      throw std::invalid_argument("loss_and_grad: feature length mismatch");
    X.push_back(f);
    y.push_back(a);
  }
  std::vector<int> idx(batch.size());
  std::iota(idx.begin(), idx.end(), 0);
  Workspace ws(net);
  Gradients grads = zero_gradients(net);
  const BatchStats stats =
      batch_loss_grad(net, X, y, idx.data(), static_cast<int>(idx.size()), ws, grads);
  if (!std::isfinite(stats.loss))
    throw StageError("loss_and_grad: non-finite loss");
  return {stats.loss, std::move(grads)};
}

OptimizerState OptimizerState::init(const PolicyNet& net, const AdamWParams& params) {
  OptimizerState st;
  st.params = params;
  for (int l = 0; l < net.n_layers(); ++l) {
    const auto lu = static_cast<std::size_t>(l);
    st.m_w.emplace_back(net.weights[lu].size(), 0.0);
    st.v_w.emplace_back(net.weights[lu].size(), 0.0);
    st.m_b.emplace_back(net.biases[lu].size(), 0.0);
    st.v_b.emplace_back(net.biases[lu].size(), 0.0);
  }
  return st;
}

namespace {

void adamw_tensor(std::vector<double>& p, const std::vector<double>& g,
                  std::vector<double>& m, std::vector<double>& v,
                  const AdamWParams& hp, double bc1, double bc2) {
  const double decay = 1.0 - hp.lr * hp.weight_decay;
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i] = hp.beta1 * m[i] + (1.0 - hp.beta1) * g[i];
    v[i] = hp.beta2 * v[i] + (1.0 - hp.beta2) * g[i] * g[i];
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    p[i] -= hp.lr * mhat / (std::sqrt(vhat) + hp.eps);
    p[i] *= decay;
  }
}

}  // namespace

void adamw_step(PolicyNet& net, const Gradients& grads, OptimizerState& state) {
  state.step += 1;
  state.beta1_pow *= state.params.beta1;
  state.beta2_pow *= state.params.beta2;
  const double bc1 = 1.0 - state.beta1_pow;
  const double bc2 = 1.0 - state.beta2_pow;
  for (int l = 0; l < net.n_layers(); ++l) {
    const auto lu = static_cast<std::size_t>(l);
    adamw_tensor(net.weights[lu], grads.weights[lu], state.m_w[lu], state.v_w[lu],
                 state.params, bc1, bc2);
    adamw_tensor(net.biases[lu], grads.biases[lu], state.m_b[lu], state.v_b[lu],
                 state.params, bc1, bc2);
  }
}

Action predict_action(const PolicyNet& net, const std::vector<double>& features) {
  const std::vector<double> z = forward(net, features);
  int best = 0;
  for (int k = 1; k < 3; ++k)
    if (z[static_cast<std::size_t>(k)] > z[static_cast<std::size_t>(best)]) best = k;
  return static_cast<Action>(best);
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (lr <= 0.0) throw ConfigError("train: lr must be > 0");
  if (weight_decay < 0.0) throw ConfigError("train: weight_decay must be >= 0");
  if (val_fraction < 0.0 || val_fraction >= 1.0)
    throw ConfigError("train: val_fraction must be in [0, 1)");
  for (int d : hidden_dims)
    if (d < 1) throw ConfigError("train: hidden dims must be positive");
}

std::pair<PolicyNet, TrainReport> train_policy(const std::vector<std::vector<double>>& features,
                                               const std::vector<Action>& labels,
                                               const TrainConfig& cfg) {
  cfg.validate();
  if (features.empty() || features.size() != labels.size())
    throw std::invalid_argument("train: empty dataset or feature/label size mismatch");
  const auto t0 = std::chrono::steady_clock::now();
  const int n = static_cast<int>(features.size());
  const int feat_len = static_cast<int>(features.front().size());
  for (const auto& f : features)
    if (static_cast<int>(f.size()) != feat_len)
      throw std::invalid_argument("train: ragged feature matrix");

  std::vector<int> dims{feat_len};
  dims.insert(dims.end(), cfg.hidden_dims.begin(), cfg.hidden_dims.end());
  dims.push_back(3);
  PolicyNet net = init_policy(dims, seed_combine(cfg.seed, 0x1157));

  Rng rng(cfg.seed);
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm);
  int n_val = static_cast<int>(std::lround(cfg.val_fraction * n));
  n_val = std::min(n_val, n - 1);
  const int n_train = n - n_val;
  std::vector<int> train_idx(perm.begin(), perm.begin() + n_train);
  std::vector<int> val_idx(perm.begin() + n_train, perm.end());

  OptimizerState state = OptimizerState::init(net, {cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay});
  Workspace ws(net);
  Gradients grads = zero_gradients(net);

  TrainReport report;
  report.seed = cfg.seed;
  report.n_train = n_train;
  report.n_val = n_val;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(train_idx);
    double loss_sum = 0.0;
    int correct = 0;
    for (int off = 0; off < n_train; off += cfg.batch_size) {
      const int count = std::min(cfg.batch_size, n_train - off);
      const BatchStats stats =
          batch_loss_grad(net, features, labels, train_idx.data() + off, count, ws, grads);
      if (!std::isfinite(stats.loss))
        throw StageError("train: non-finite loss at epoch " + std::to_string(epoch) +
                         " batch " + std::to_string(off / cfg.batch_size));
      adamw_step(net, grads, state);
      loss_sum += stats.loss * count;
      correct += stats.correct;
    }
    report.epoch_loss.push_back(loss_sum / n_train);
    report.epoch_accuracy.push_back(static_cast<double>(correct) / n_train);
  }

  if (n_val > 0) {
    int correct = 0;
    for (int i : val_idx) {
      forward_into(net, features[static_cast<std::size_t>(i)].data(), ws);
      const auto& z = ws.pre[static_cast<std::size_t>(net.n_layers()) - 1];
      int best = 0;
      for (int k = 1; k < 3; ++k)
        if (z[static_cast<std::size_t>(k)] > z[static_cast<std::size_t>(best)]) best = k;
      correct += best == static_cast<int>(labels[static_cast<std::size_t>(i)]);
    }
    report.val_accuracy = static_cast<double>(correct) / n_val;
  }
  report.wall_clock_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(net), std::move(report)};
}

std::pair<PolicyNet, TrainReport> train(const DemoDataset& dataset, const ChannelSet& channels,
                                        const ExtractionContext& ctx, const TrainConfig& cfg) {
  if (dataset.samples.empty()) throw std::invalid_argument("train: empty demo dataset");
  std::vector<std::vector<double>> X;
  std::vector<Action> y;
  X.reserve(dataset.samples.size());
  y.reserve(dataset.samples.size());
  for (const auto& s : dataset.samples) {
    X.push_back(extract(s.obs, s.pose, s.goal, channels, ctx));
    y.push_back(s.action);
  }
  return train_policy(X, y, cfg);
}

std::string checkpoint_to_json(const PolicyNet& net, const ChannelSet& channels,
                               const TrainConfig& cfg) {
  nlohmann::json j;
  j["layer_dims"] = net.layer_dims;
  j["channels"] = {{"use_rgb", channels.use_rgb},
                   {"use_depth", channels.use_depth},
                   {"use_semantics", channels.use_semantics},
                   {"use_navigability", channels.use_navigability}};
  std::vector<double> params;
  params.reserve(net.param_count());
  for (int l = 0; l < net.n_layers(); ++l) {
    const auto lu = static_cast<std::size_t>(l);
    params.insert(params.end(), net.weights[lu].begin(), net.weights[lu].end());
    params.insert(params.end(), net.biases[lu].begin(), net.biases[lu].end());
  }
  j["params"] = params;
  j["seed"] = cfg.seed;
  j["config"] = {{"hidden_dims", cfg.hidden_dims}, {"epochs", cfg.epochs},
                 {"batch_size", cfg.batch_size},   {"lr", cfg.lr},
                 {"weight_decay", cfg.weight_decay}, {"val_fraction", cfg.val_fraction}};
  return j.dump();
}

Checkpoint checkpoint_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("checkpoint: parse failure: ") + e.what());
  }
  try {
    Checkpoint ck;
    ck.net.layer_dims = j.at("layer_dims").get<std::vector<int>>();
    check_dims(ck.net.layer_dims);
    const auto& ch = j.at("channels");
    ck.channels.use_rgb = ch.at("use_rgb").get<bool>();
    ck.channels.use_depth = ch.at("use_depth").get<bool>();
    ck.channels.use_semantics = ch.at("use_semantics").get<bool>();
    ck.channels.use_navigability = ch.at("use_navigability").get<bool>();
    ck.channels.validate();
    const auto params = j.at("params").get<std::vector<double>>();
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < ck.net.layer_dims.size(); ++l) {
      const auto n_in = static_cast<std::size_t>(ck.net.layer_dims[l]);
      const auto n_out = static_cast<std::size_t>(ck.net.layer_dims[l + 1]);
      if (off + n_out * n_in + n_out > params.size())
        throw ConfigError("checkpoint: parameter vector too short");
      ck.net.weights.emplace_back(params.begin() + static_cast<std::ptrdiff_t>(off),
                                  params.begin() + static_cast<std::ptrdiff_t>(off + n_out * n_in));
      off += n_out * n_in;
      ck.net.biases.emplace_back(params.begin() + static_cast<std::ptrdiff_t>(off),
                                 params.begin() + static_cast<std::ptrdiff_t>(off + n_out));
      off += n_out;
    }
    if (off != params.size()) throw ConfigError("checkpoint: parameter count mismatch");
    const auto& cfg = j.at("config");
    ck.config.hidden_dims = cfg.at("hidden_dims").get<std::vector<int>>();
    ck.config.epochs = cfg.at("epochs").get<int>();
    ck.config.batch_size = cfg.at("batch_size").get<int>();
    ck.config.lr = cfg.at("lr").get<double>();
    ck.config.weight_decay = cfg.at("weight_decay").get<double>();
    ck.config.val_fraction = cfg.at("val_fraction").get<double>();
    ck.config.seed = j.at("seed").get<std::uint64_t>();
    return ck;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("checkpoint: bad schema: ") + e.what());
  }
}

}  // namespace navshift
