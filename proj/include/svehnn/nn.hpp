#pragma once

#include <atomic>
#include <cstdint>
#include <vector>

#include "svehnn/common.hpp"

namespace svehnn {

struct PointCloud {
  std::vector<Point3> points;
  int size() const { return static_cast<int>(points.size()); }
};

struct TabularVector {
  Vec values;
  int size() const { return static_cast<int>(values.size()); }
};

// One example z = (point cloud, tabular vector); the unit of explanation.
struct HeterogeneousInput {
  PointCloud cloud;
  TabularVector tabular;
};

struct DenseLayerParams {
  int in_dim = 0;
  int out_dim = 0;
  Vec weights;  // row-major, in_dim x out_dim
  Vec bias;     // out_dim

  double w(int in, int out) const {
    return weights[static_cast<std::size_t>(in) * out_dim + out];
  }
  double& w(int in, int out) {
    return weights[static_cast<std::size_t>(in) * out_dim + out];
  }
  static DenseLayerParams zeros(int in_dim, int out_dim);
  void validate(const char* what) const;
};

// Inference-mode batch norm: a frozen per-channel affine map
//   y = scale * x + shift,  scale = gamma / sqrt(running_var + eps)
struct BatchNormParams {
  Vec gamma, beta, running_mean, running_var;
  double epsilon = 1e-5;

  int dim() const { return static_cast<int>(gamma.size()); }
  double scale(int c) const {
    return gamma[c] / std::sqrt(running_var[c] + epsilon);
  }
  double shift(int c) const { return beta[c] - scale(c) * running_mean[c]; }
  static BatchNormParams identity(int dim);
  void validate(const char* what) const;
};

struct PointMlpLayer {
  DenseLayerParams dense;
  BatchNormParams bn;
  bool relu = true;
};

// Wide-and-deep network over (point cloud, tabular): a per-point shared-weight
// MLP, channelwise max pooling, then one linear layer fusing the pooled
// descriptor with the tabular features into a single logit. k_points = 0 is
// the tabular-only degenerate configuration (no point arm at all).
struct WdpnModel {
  int k_points = 0;
  int d_tabular = 0;
  std::vector<PointMlpLayer> point_mlp;
  DenseLayerParams fusion;  // (latent_dim + d_tabular) -> 1

  int latent_dim() const {
    return point_mlp.empty() ? 0 : point_mlp.back().dense.out_dim;
  }
  int num_features() const { return k_points + d_tabular; }
  void validate() const;
};

// Counts full network forward passes; safe to increment concurrently.
class EvalCounter {
 public:
  EvalCounter() = default;
  EvalCounter(const EvalCounter&) = delete;
  EvalCounter& operator=(const EvalCounter&) = delete;

  void add(std::uint64_t n = 1) { count_.fetch_add(n, std::memory_order_relaxed); }
  std::uint64_t count() const { return count_.load(std::memory_order_relaxed); }

 private:
  std::atomic<std::uint64_t> count_{0};
};

Vec linear_forward(const Vec& x, const DenseLayerParams& params);
Vec relu_forward(Vec x);
Vec batchnorm_infer(const Vec& x, const BatchNormParams& params);

// Shared MLP applied to one point.
Vec point_descriptor(const Point3& p, const WdpnModel& model);

// Per-point MLP followed by channelwise max over points.
Vec pointnet_encode(const PointCloud& cloud, const WdpnModel& model);

// Fused scalar logit; increments the counter by one when given.
double wdpn_forward(const HeterogeneousInput& z, const WdpnModel& model,
                    EvalCounter* counter);

// Black-box view of a scalar-logit model, the function every explainer
// treats as opaque.
class LogitModel {
 public:
  virtual ~LogitModel() = default;
  virtual int num_points() const = 0;
  virtual int num_tabular() const = 0;
  virtual double logit(const HeterogeneousInput& z, EvalCounter* counter) const = 0;
};

class WdpnLogit final : public LogitModel {
 public:
  explicit WdpnLogit(const WdpnModel& model) : model_(&model) {}
  int num_points() const override { return model_->k_points; }
  int num_tabular() const override { return model_->d_tabular; }
  double logit(const HeterogeneousInput& z, EvalCounter* counter) const override {
    return wdpn_forward(z, *model_, counter);
  }
  const WdpnModel& model() const { return *model_; }

 private:
  const WdpnModel* model_;
};

}  // namespace svehnn
