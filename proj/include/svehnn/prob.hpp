#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "svehnn/baseline.hpp"
#include "svehnn/nn.hpp"

namespace svehnn {

// Variance attached to a point's first-layer output under random subset
// membership. `as_written` sums the sampling variance over the point's three
// coordinates as if they entered independently; `bernoulli_point` treats the
// whole point as one Bernoulli inclusion.
enum class VarianceMode { as_written, bernoulli_point };

const char* variance_mode_name(VarianceMode mode);
VarianceMode variance_mode_from_name(const std::string& name);

// Independent per-unit Gaussians, the currency of probabilistic propagation.
struct Gaussian {
  double mean = 0.0;
  double var = 0.0;
};

struct GaussianVector {
  Vec mean;
  Vec var;
  int size() const { return static_cast<int>(mean.size()); }
};

struct ProbDiagnostics {
  std::uint64_t variance_clamps = 0;    // materially negative variances zeroed
  double fold_sensitivity = 0.0;        // max |mean_lr - mean_rl| over pooled channels
  double max_output_variance = 0.0;     // largest logit variance seen
};

// Random feature subset of fixed size k, with at most one feature forced in
// or out deterministically. Free features are included independently with
// probability k / |F|.
struct SubsetSpec {
  int subset_size = 0;  // k, in [0, |F|]
  std::optional<int> forced_in;
  std::optional<int> forced_out;
  BaselineSpec baseline;
};

// Probabilistic twin sharing the deterministic model's parameters.
struct ProbWdpnModel {
  const WdpnModel* model = nullptr;
  VarianceMode mode = VarianceMode::as_written;
};

ProbWdpnModel lift_model(const WdpnModel& model,
                         VarianceMode mode = VarianceMode::as_written);

enum class ForceState { free, included, excluded };

// Moments of the first linear layer's output for one point whose membership
// in the subset is random (or forced).
GaussianVector subset_first_layer(const Point3& point,
                                  const Point3& baseline_point,
                                  const DenseLayerParams& params,
                                  int subset_size, int total_features,
                                  ForceState force, VarianceMode mode,
                                  ProbDiagnostics* diag);

GaussianVector prob_linear(const GaussianVector& g,
                           const DenseLayerParams& params);
Gaussian prob_relu(const Gaussian& g);
GaussianVector prob_relu(const GaussianVector& g);
GaussianVector prob_batchnorm(const GaussianVector& g,
                              const BatchNormParams& params);

// Moment-matched max of two independent Gaussians (Clark's approximation).
Gaussian prob_max_pair(const Gaussian& a, const Gaussian& b);

// Channelwise left-to-right fold of prob_max_pair, by point index.
GaussianVector prob_maxpool(const std::vector<GaussianVector>& per_point);

// Contribution of the tabular slots to the fusion output moments (bias not
// included). Forced features enter deterministically; free features are
// Bernoulli-included with probability k / |F|.
Gaussian tabular_subset_moments(const TabularVector& x,
                                const DenseLayerParams& fusion, int latent_dim,
                                int k_points, const SubsetSpec& spec,
                                int total_features, VarianceMode mode);

// One probabilistic pass: logit moments under the subset distribution.
// Counts as one network evaluation on `prob_evals`.
Gaussian prob_forward_expectation(const HeterogeneousInput& z,
                                  const ProbWdpnModel& prob_model,
                                  const SubsetSpec& spec,
                                  EvalCounter* prob_evals,
                                  ProbDiagnostics* diag);

// Expected marginal contribution of `feature` at subset size k, from exactly
// two probabilistic passes (feature forced in vs forced out).
double expectation_difference(int feature, int k, const HeterogeneousInput& z,
                              const ProbWdpnModel& prob_model,
                              const BaselineSpec& baseline,
                              EvalCounter* prob_evals, ProbDiagnostics* diag);

}  // namespace svehnn
