#include "svehnn/nn.hpp"

#include <algorithm>
#include <cstdio>

namespace svehnn {

std::string to_hex(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(value));
  return std::string(buf);
}

DenseLayerParams DenseLayerParams::zeros(int in_dim, int out_dim) {
  DenseLayerParams p;
  p.in_dim = in_dim;
  p.out_dim = out_dim;
  p.weights.assign(static_cast<std::size_t>(in_dim) * out_dim, 0.0);
  p.bias.assign(out_dim, 0.0);
  return p;
}

void DenseLayerParams::validate(const char* what) const {
  if (in_dim < 0 || out_dim <= 0)
    throw ShapeError(std::string(what) + ": bad dimensions");
  if (weights.size() != static_cast<std::size_t>(in_dim) * out_dim)
    throw ShapeError(std::string(what) + ": weight count mismatch");
  if (bias.size() != static_cast<std::size_t>(out_dim))
    throw ShapeError(std::string(what) + ": bias count mismatch");
  require_finite(weights, what);
  require_finite(bias, what);
}

BatchNormParams BatchNormParams::identity(int dim) {
  BatchNormParams p;
  p.gamma.assign(dim, 1.0);
  p.beta.assign(dim, 0.0);
  p.running_mean.assign(dim, 0.0);
  p.running_var.assign(dim, 1.0);
  p.epsilon = 0.0;
  return p;
}

void BatchNormParams::validate(const char* what) const {
  const std::size_t n = gamma.size();
  if (beta.size() != n || running_mean.size() != n || running_var.size() != n)
    throw ShapeError(std::string(what) + ": channel count mismatch");
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
    throw ShapeError(std::string(what) + ": bad epsilon");
  require_finite(gamma, what);
  require_finite(beta, what);
  require_finite(running_mean, what);
  require_finite(running_var, what);
  for (double v : running_var) {
    if (v < 0.0) throw ShapeError(std::string(what) + ": negative running variance");
    if (v + epsilon <= 0.0)
      throw ShapeError(std::string(what) + ": zero normalizer");
  }
}

void WdpnModel::validate() const {
  if (k_points < 0 || d_tabular < 0)
    throw ShapeError("model: negative dimensions");
  if (num_features() < 1) throw ShapeError("model: no features");
  if (k_points > 0) {
    if (point_mlp.empty())
      throw ShapeError("model: point arm requires at least one layer");
    int in = 3;
    for (std::size_t i = 0; i < point_mlp.size(); ++i) {
      const auto& layer = point_mlp[i];
      layer.dense.validate("point_mlp dense");
      layer.bn.validate("point_mlp batchnorm");
      if (layer.dense.in_dim != in)
        throw ShapeError("model: point layer input width mismatch");
      if (layer.bn.dim() != layer.dense.out_dim)
        throw ShapeError("model: batchnorm width mismatch");
      in = layer.dense.out_dim;
    }
  } else if (!point_mlp.empty()) {
    throw ShapeError("model: point layers without points");
  }
  fusion.validate("fusion");
  if (fusion.in_dim != latent_dim() + d_tabular)
    throw ShapeError("model: fusion input width mismatch");
  if (fusion.out_dim != 1) throw ShapeError("model: fusion must emit one logit");
}

Vec linear_forward(const Vec& x, const DenseLayerParams& params) {
  if (x.size() != static_cast<std::size_t>(params.in_dim))
    throw ShapeError("linear_forward: input width mismatch");
  Vec out(params.bias);
  for (int l = 0; l < params.in_dim; ++l) {
    const double xl = x[l];
    const double* row = params.weights.data() +
                        static_cast<std::size_t>(l) * params.out_dim;
    for (int m = 0; m < params.out_dim; ++m) out[m] += xl * row[m];
  }
  return out;
}

Vec relu_forward(Vec x) {
  for (double& v : x) v = v > 0.0 ? v : 0.0;
  return x;
}

Vec batchnorm_infer(const Vec& x, const BatchNormParams& params) {
  if (x.size() != static_cast<std::size_t>(params.dim()))
    throw ShapeError("batchnorm_infer: channel count mismatch");
  Vec out(x.size());
  for (std::size_t c = 0; c < x.size(); ++c) {
    const int ci = static_cast<int>(c);
    out[c] = params.scale(ci) * x[c] + params.shift(ci);
  }
  return out;
}

Vec point_descriptor(const Point3& p, const WdpnModel& model) {
  Vec h(p.begin(), p.end());
  for (const auto& layer : model.point_mlp) {
    h = linear_forward(h, layer.dense);
    h = batchnorm_infer(h, layer.bn);
    if (layer.relu) h = relu_forward(std::move(h));
  }
  return h;
}

Vec pointnet_encode(const PointCloud& cloud, const WdpnModel& model) {
  if (cloud.points.empty())
    throw DomainError("pointnet_encode: empty point cloud");
  Vec pooled = point_descriptor(cloud.points[0], model);
  for (std::size_t j = 1; j < cloud.points.size(); ++j) {
    const Vec h = point_descriptor(cloud.points[j], model);
    for (std::size_t c = 0; c < pooled.size(); ++c)
      pooled[c] = std::max(pooled[c], h[c]);
  }
  return pooled;
}

double wdpn_forward(const HeterogeneousInput& z, const WdpnModel& model,
                    EvalCounter* counter) {
  if (z.cloud.size() != model.k_points)
    throw ShapeError("wdpn_forward: point count mismatch");
  if (z.tabular.size() != model.d_tabular)
    throw ShapeError("wdpn_forward: tabular width mismatch");
  Vec fused;
  fused.reserve(static_cast<std::size_t>(model.latent_dim()) + model.d_tabular);
  if (model.k_points > 0) fused = pointnet_encode(z.cloud, model);
  fused.insert(fused.end(), z.tabular.values.begin(), z.tabular.values.end());
  const Vec out = linear_forward(fused, model.fusion);
  if (counter) counter->add(1);
  return out[0];
}

}  // namespace svehnn
