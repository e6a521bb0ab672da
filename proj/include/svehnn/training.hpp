#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "svehnn/datagen.hpp"
#include "svehnn/nn.hpp"

namespace svehnn {

enum class Optimizer { sgd, adam };

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainConfig {
  int epochs = 40;
  int batch_size = 32;
  double learning_rate = 1e-3;
  Optimizer optimizer = Optimizer::adam;
  AdamParams adam;
  std::uint64_t seed = 0;
  double init_scale = 1.0;        // multiplies 1/sqrt(in_dim)
  double holdout_fraction = 0.25;
  double bn_momentum = 0.9;       // running = m*running + (1-m)*batch
  double bn_epsilon = 1e-5;
};

struct ArchSpec {
  std::vector<int> point_mlp_widths{32, 64};
};

struct TrainReport {
  std::vector<double> epoch_loss;
  double balanced_accuracy = 0.5;
  std::string parameter_checksum;
  std::int64_t train_size = 0;
  std::int64_t holdout_size = 0;
};

// Binary cross entropy on sigmoid(logit): softplus(logit) - label * logit.
double bce_loss(double logit, int label);

// Parameter gradients, mirroring the model's trainable parameters (dense
// weights/biases and batch-norm gamma/beta; running statistics are frozen
// constants for differentiation).
struct DenseGrads {
  Vec weights;
  Vec bias;
};

struct LayerGrads {
  DenseGrads dense;
  Vec gamma;
  Vec beta;
};

struct Gradients {
  std::vector<LayerGrads> point_mlp;
  DenseGrads fusion;
};

// Exact reverse-mode gradients of bce_loss(wdpn_forward(z), label). Max
// pooling routes gradient to the argmax point per channel, lowest point
// index on ties.
Gradients backward(const HeterogeneousInput& z, int label,
                   const WdpnModel& model);

// Seeded uniform init in [-s, s], s = init_scale / sqrt(in_dim).
WdpnModel init_model(int k, int d, const ArchSpec& arch, std::uint64_t seed,
                     double init_scale = 1.0, double bn_epsilon = 1e-5);

// Balanced accuracy (mean per-class recall); 0.5 when a class is absent.
double balanced_accuracy(const WdpnModel& model,
                         const std::vector<LabeledExample>& examples);

std::pair<WdpnModel, TrainReport> train(
    const std::vector<LabeledExample>& examples, int k, int d,
    const ArchSpec& arch, const TrainConfig& config);

}  // namespace svehnn
