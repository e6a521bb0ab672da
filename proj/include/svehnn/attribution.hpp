#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "svehnn/baseline.hpp"
#include "svehnn/nn.hpp"
#include "svehnn/prob.hpp"

namespace svehnn {

// Dense feature ids: points first (0..K-1), then tabular columns (K..K+D-1).
struct FeatureSpace {
  int k_points = 0;
  int d_tabular = 0;

  int total() const { return k_points + d_tabular; }
  bool is_point(int feature) const { return feature < k_points; }
  int tabular_column(int feature) const { return feature - k_points; }
};

// Membership mask over the feature space; supports |F| beyond 64.
class Coalition {
 public:
  explicit Coalition(int n_features)
      : n_(n_features),
        words_((static_cast<std::size_t>(n_features) + 63) / 64, 0) {}

  static Coalition from_mask(std::uint64_t mask, int n_features) {
    Coalition c(n_features);
    if (!c.words_.empty()) c.words_[0] = mask;
    return c;
  }
  static Coalition full(int n_features) {
    Coalition c(n_features);
    for (int i = 0; i < n_features; ++i) c.set(i);
    return c;
  }

  int size() const { return n_; }
  bool test(int i) const {
    return (words_[static_cast<std::size_t>(i) >> 6] >> (i & 63)) & 1u;
  }
  void set(int i) { words_[static_cast<std::size_t>(i) >> 6] |= 1ull << (i & 63); }
  void reset(int i) {
    words_[static_cast<std::size_t>(i) >> 6] &= ~(1ull << (i & 63));
  }
  int count() const;

 private:
  int n_ = 0;
  std::vector<std::uint64_t> words_;
};

// Monte-Carlo budget and determinism knobs shared by the sampled estimators.
struct ExplainerConfig {
  std::int64_t m = 1;
  std::uint64_t seed = 0;
  VarianceMode variance_mode = VarianceMode::as_written;
};

struct Attribution {
  std::vector<double> values;  // one per feature, logit units
  std::string estimator;
  BaselineKind baseline = BaselineKind::zero;
  std::uint64_t evaluations = 0;
  double f_z = 0.0;
  double f_baseline = 0.0;
  std::map<std::string, double> diagnostics;
};

// Exact enumeration refuses beyond this feature count.
inline constexpr int kExactFeatureCap = 24;

HeterogeneousInput masked_input(const HeterogeneousInput& z, const Coalition& s,
                                const BaselineSpec& baseline);

// g(S) = f(masked(S)) - f(z^bl); g(empty) == 0 by construction.
double coalition_value(const Coalition& s, const HeterogeneousInput& z,
                       const LogitModel& model, const BaselineSpec& baseline,
                       EvalCounter* counter);

Attribution exact_shapley(const HeterogeneousInput& z, const LogitModel& model,
                          const BaselineSpec& baseline, int threads = 1);

Attribution shapley_sampling(const HeterogeneousInput& z,
                             const LogitModel& model,
                             const BaselineSpec& baseline,
                             const ExplainerConfig& config, int threads = 1);

Attribution occlusion(const HeterogeneousInput& z, const LogitModel& model,
                      const BaselineSpec& baseline);

Attribution svehnn_full(const HeterogeneousInput& z, const WdpnModel& model,
                        const BaselineSpec& baseline,
                        VarianceMode mode = VarianceMode::as_written,
                        int threads = 1);

// Shared core of the sampled variant: averages expectation differences over
// the given subset sizes per feature.
Attribution svehnn_from_draws(const HeterogeneousInput& z,
                              const WdpnModel& model,
                              const BaselineSpec& baseline, VarianceMode mode,
                              const std::vector<std::vector<int>>& draws,
                              int threads = 1);

Attribution svehnn_mc(const HeterogeneousInput& z, const WdpnModel& model,
                      const BaselineSpec& baseline,
                      const ExplainerConfig& config, int threads = 1);

}  // namespace svehnn
