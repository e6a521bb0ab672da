#include "svehnn/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "svehnn/model_io.hpp"
#include "svehnn/rng.hpp"

namespace svehnn {

double bce_loss(double logit, int label) {
  if (label != 0 && label != 1)
    throw DomainError("bce_loss: label must be 0 or 1");
  return softplus(logit) - static_cast<double>(label) * logit;
}

namespace {

struct PointTrace {
  std::vector<Vec> input;    // activation entering each layer
  std::vector<Vec> pre_bn;   // after the dense map
  std::vector<Vec> pre_act;  // after batch norm, before relu
  Vec out;
};

struct Trace {
  std::vector<PointTrace> points;
  Vec latent;
  std::vector<int> argmax;
  Vec fused;
  double logit = 0.0;
};

Trace forward_trace(const HeterogeneousInput& z, const WdpnModel& model) {
  if (z.cloud.size() != model.k_points || z.tabular.size() != model.d_tabular)
    throw ShapeError("train forward: input does not match model dims");
  Trace tr;
  const int k = model.k_points;
  tr.points.resize(k);
  for (int j = 0; j < k; ++j) {
    PointTrace& pt = tr.points[j];
    Vec h(z.cloud.points[j].begin(), z.cloud.points[j].end());
    for (const auto& layer : model.point_mlp) {
      pt.input.push_back(h);
      h = linear_forward(h, layer.dense);
      pt.pre_bn.push_back(h);
      h = batchnorm_infer(h, layer.bn);
      pt.pre_act.push_back(h);
      if (layer.relu) h = relu_forward(std::move(h));
    }
    pt.out = h;
  }
  if (k > 0) {
    const int latent = model.latent_dim();
    tr.latent.assign(latent, 0.0);
    tr.argmax.assign(latent, 0);
    for (int c = 0; c < latent; ++c) {
      double best = tr.points[0].out[c];
      int best_j = 0;
      for (int j = 1; j < k; ++j) {
        if (tr.points[j].out[c] > best) {  // ties keep the lowest index
          best = tr.points[j].out[c];
          best_j = j;
        }
      }
      tr.latent[c] = best;
      tr.argmax[c] = best_j;
    }
  }
  tr.fused = tr.latent;
  tr.fused.insert(tr.fused.end(), z.tabular.values.begin(),
                  z.tabular.values.end());
  tr.logit = linear_forward(tr.fused, model.fusion)[0];
  return tr;
}

Gradients zero_gradients(const WdpnModel& model) {
  Gradients g;
  g.point_mlp.resize(model.point_mlp.size());
  for (std::size_t l = 0; l < model.point_mlp.size(); ++l) {
    const auto& layer = model.point_mlp[l];
    g.point_mlp[l].dense.weights.assign(layer.dense.weights.size(), 0.0);
    g.point_mlp[l].dense.bias.assign(layer.dense.bias.size(), 0.0);
    g.point_mlp[l].gamma.assign(layer.bn.gamma.size(), 0.0);
    g.point_mlp[l].beta.assign(layer.bn.beta.size(), 0.0);
  }
  g.fusion.weights.assign(model.fusion.weights.size(), 0.0);
  g.fusion.bias.assign(model.fusion.bias.size(), 0.0);
  return g;
}

void accumulate_backward(int label, const WdpnModel& model, const Trace& tr,
                         Gradients& grads) {
  const double dlogit = sigmoid(tr.logit) - static_cast<double>(label);
  const int latent = model.latent_dim();
  const int k = model.k_points;

  for (std::size_t l = 0; l < tr.fused.size(); ++l)
    grads.fusion.weights[l] += tr.fused[l] * dlogit;
  grads.fusion.bias[0] += dlogit;

  if (k == 0) return;

  // route the pooled gradient to the argmax point per channel
  std::vector<Vec> dout(k, Vec(latent, 0.0));
  for (int c = 0; c < latent; ++c)
    dout[tr.argmax[c]][c] += model.fusion.w(c, 0) * dlogit;

  const int layers = static_cast<int>(model.point_mlp.size());
  for (int j = 0; j < k; ++j) {
    Vec da = std::move(dout[j]);
    const PointTrace& pt = tr.points[j];
    for (int l = layers - 1; l >= 0; --l) {
      const auto& layer = model.point_mlp[l];
      const int width = layer.dense.out_dim;
      auto& lg = grads.point_mlp[l];
      Vec dz(width);
      for (int c = 0; c < width; ++c) {
        double dy = da[c];
        if (layer.relu && pt.pre_act[l][c] <= 0.0) dy = 0.0;
        const double z_hat =
            (pt.pre_bn[l][c] - layer.bn.running_mean[c]) /
            std::sqrt(layer.bn.running_var[c] + layer.bn.epsilon);
        lg.gamma[c] += dy * z_hat;
        lg.beta[c] += dy;
        dz[c] = dy * layer.bn.scale(c);
      }
      const Vec& in = pt.input[l];
      Vec din(layer.dense.in_dim, 0.0);
      for (int r = 0; r < layer.dense.in_dim; ++r) {
        const double xr = in[r];
        const std::size_t base = static_cast<std::size_t>(r) * width;
        double acc = 0.0;
        for (int c = 0; c < width; ++c) {
          lg.dense.weights[base + c] += xr * dz[c];
          acc += layer.dense.weights[base + c] * dz[c];
        }
        din[r] = acc;
      }
      for (int c = 0; c < width; ++c) lg.dense.bias[c] += dz[c];
      da = std::move(din);
    }
  }
}

// canonical flattening order: per point layer (W, b, gamma, beta), then
// fusion (W, b)
std::vector<double*> trainable_params(WdpnModel& model) {
  std::vector<double*> out;
  for (auto& layer : model.point_mlp) {
    for (auto& v : layer.dense.weights) out.push_back(&v);
    for (auto& v : layer.dense.bias) out.push_back(&v);
    for (auto& v : layer.bn.gamma) out.push_back(&v);
    for (auto& v : layer.bn.beta) out.push_back(&v);
  }
  for (auto& v : model.fusion.weights) out.push_back(&v);
  for (auto& v : model.fusion.bias) out.push_back(&v);
  return out;
}

Vec flatten_gradients(const Gradients& g) {
  Vec out;
  for (const auto& layer : g.point_mlp) {
    out.insert(out.end(), layer.dense.weights.begin(), layer.dense.weights.end());
    out.insert(out.end(), layer.dense.bias.begin(), layer.dense.bias.end());
    out.insert(out.end(), layer.gamma.begin(), layer.gamma.end());
    out.insert(out.end(), layer.beta.begin(), layer.beta.end());
  }
  out.insert(out.end(), g.fusion.weights.begin(), g.fusion.weights.end());
  out.insert(out.end(), g.fusion.bias.begin(), g.fusion.bias.end());
  return out;
}

}  // namespace

Gradients backward(const HeterogeneousInput& z, int label,
                   const WdpnModel& model) {
  if (label != 0 && label != 1)
    throw DomainError("backward: label must be 0 or 1");
  Gradients grads = zero_gradients(model);
  const Trace tr = forward_trace(z, model);
  accumulate_backward(label, model, tr, grads);
  return grads;
}

WdpnModel init_model(int k, int d, const ArchSpec& arch, std::uint64_t seed,
                     double init_scale, double bn_epsilon) {
  WdpnModel model;
  model.k_points = k;
  model.d_tabular = d;
  Rng rng = Rng::substream(seed, 0xC0DE);
  auto init_dense = [&](int in_dim, int out_dim) {
    DenseLayerParams p = DenseLayerParams::zeros(in_dim, out_dim);
    const double s = init_scale / std::sqrt(static_cast<double>(in_dim));
    for (auto& w : p.weights) w = rng.uniform(-s, s);
    for (auto& b : p.bias) b = rng.uniform(-s, s);
    return p;
  };
  if (k > 0) {
    if (arch.point_mlp_widths.empty())
      throw ShapeError("init_model: point arm needs at least one width");
    int in = 3;
    for (int width : arch.point_mlp_widths) {
      PointMlpLayer layer;
      layer.dense = init_dense(in, width);
      layer.bn = BatchNormParams::identity(width);
      layer.bn.epsilon = bn_epsilon;
      layer.relu = true;
      model.point_mlp.push_back(std::move(layer));
      in = width;
    }
  }
  model.fusion = init_dense(model.latent_dim() + d, 1);
  model.validate();
  return model;
}

double balanced_accuracy(const WdpnModel& model,
                         const std::vector<LabeledExample>& examples) {
  std::array<std::int64_t, 2> total{0, 0};
  std::array<std::int64_t, 2> correct{0, 0};
  for (const auto& ex : examples) {
    const double logit = wdpn_forward(ex.input, model, nullptr);
    const int pred = logit > 0.0 ? 1 : 0;
    total[ex.label] += 1;
    if (pred == ex.label) correct[ex.label] += 1;
  }
  if (total[0] == 0 || total[1] == 0) return 0.5;  // single-class convention
  const double r0 = static_cast<double>(correct[0]) / total[0];
  const double r1 = static_cast<double>(correct[1]) / total[1];
  return 0.5 * (r0 + r1);
}

std::pair<WdpnModel, TrainReport> train(
    const std::vector<LabeledExample>& examples, int k, int d,
    const ArchSpec& arch, const TrainConfig& config) {
  if (examples.empty()) throw DomainError("train: empty dataset");
  if (config.epochs < 1 || config.batch_size < 1 ||
      config.learning_rate <= 0.0)
    throw DomainError("train: epochs, batch size, learning rate must be positive");

  WdpnModel model =
      init_model(k, d, arch, config.seed, config.init_scale, config.bn_epsilon);

  const std::size_t n = examples.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng = Rng::substream(config.seed, 0x5EED);
  split_rng.shuffle(order);
  std::size_t holdout = static_cast<std::size_t>(
      std::llround(config.holdout_fraction * static_cast<double>(n)));
  if (holdout >= n) holdout = n - 1;
  std::vector<std::size_t> train_idx(order.begin(), order.end() - holdout);
  std::vector<std::size_t> holdout_idx(order.end() - holdout, order.end());

  std::vector<double*> params = trainable_params(model);
  Vec adam_m(params.size(), 0.0), adam_v(params.size(), 0.0);
  std::int64_t step = 0;

  TrainReport report;
  report.train_size = static_cast<std::int64_t>(train_idx.size());
  report.holdout_size = static_cast<std::int64_t>(holdout_idx.size());

  const std::size_t layers = model.point_mlp.size();
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Rng epoch_rng = Rng::substream(config.seed, 1000 + static_cast<std::uint64_t>(epoch));
    epoch_rng.shuffle(train_idx);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < train_idx.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop = std::min(
          train_idx.size(), start + static_cast<std::size_t>(config.batch_size));
      const double batch_n = static_cast<double>(stop - start);

      Gradients grads = zero_gradients(model);
      std::vector<Vec> bn_sum(layers), bn_sumsq(layers);
      std::vector<std::int64_t> bn_count(layers, 0);
      for (std::size_t l = 0; l < layers; ++l) {
        const int width = model.point_mlp[l].dense.out_dim;
        bn_sum[l].assign(width, 0.0);
        bn_sumsq[l].assign(width, 0.0);
      }

      for (std::size_t i = start; i < stop; ++i) {
        const LabeledExample& ex = examples[train_idx[i]];
        const Trace tr = forward_trace(ex.input, model);
        epoch_loss += bce_loss(tr.logit, ex.label);
        accumulate_backward(ex.label, model, tr, grads);
        for (std::size_t l = 0; l < layers; ++l) {
          const int width = model.point_mlp[l].dense.out_dim;
          for (const auto& pt : tr.points) {
            for (int c = 0; c < width; ++c) {
              bn_sum[l][c] += pt.pre_bn[l][c];
              bn_sumsq[l][c] += pt.pre_bn[l][c] * pt.pre_bn[l][c];
            }
          }
          bn_count[l] += static_cast<std::int64_t>(tr.points.size());
        }
      }
      if (!std::isfinite(epoch_loss))
        throw DivergenceError("train: non-finite loss at epoch " +
                              std::to_string(epoch));

      Vec flat = flatten_gradients(grads);
      for (double& g : flat) g /= batch_n;
      ++step;
      if (config.optimizer == Optimizer::adam) {
        const auto& a = config.adam;
        const double bc1 = 1.0 - std::pow(a.beta1, static_cast<double>(step));
        const double bc2 = 1.0 - std::pow(a.beta2, static_cast<double>(step));
        for (std::size_t p = 0; p < params.size(); ++p) {
          adam_m[p] = a.beta1 * adam_m[p] + (1.0 - a.beta1) * flat[p];
          adam_v[p] = a.beta2 * adam_v[p] + (1.0 - a.beta2) * flat[p] * flat[p];
          const double m_hat = adam_m[p] / bc1;
          const double v_hat = adam_v[p] / bc2;
          *params[p] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + a.epsilon);
        }
      } else {
        for (std::size_t p = 0; p < params.size(); ++p)
          *params[p] -= config.learning_rate * flat[p];
      }

      // running statistics follow the batch statistics of the pre-norm
      // activations; frozen constants as far as gradients are concerned
      for (std::size_t l = 0; l < layers; ++l) {
        if (bn_count[l] == 0) continue;
        auto& bn = model.point_mlp[l].bn;
        const double cnt = static_cast<double>(bn_count[l]);
        for (int c = 0; c < model.point_mlp[l].dense.out_dim; ++c) {
          const double mean = bn_sum[l][c] / cnt;
          const double var =
              std::max(0.0, bn_sumsq[l][c] / cnt - mean * mean);
          bn.running_mean[c] = config.bn_momentum * bn.running_mean[c] +
                               (1.0 - config.bn_momentum) * mean;
          bn.running_var[c] = config.bn_momentum * bn.running_var[c] +
                              (1.0 - config.bn_momentum) * var;
        }
      }
    }
    report.epoch_loss.push_back(epoch_loss /
                                static_cast<double>(train_idx.size()));
  }

  std::vector<LabeledExample> holdout_set;
  holdout_set.reserve(holdout_idx.size());
  for (std::size_t i : holdout_idx) holdout_set.push_back(examples[i]);
  report.balanced_accuracy =
      holdout_set.empty() ? 0.5 : balanced_accuracy(model, holdout_set);
  report.parameter_checksum = model_checksum(model);
  return {std::move(model), std::move(report)};
}

}  // namespace svehnn
