#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "svehnn/prob.hpp"
#include "svehnn/rng.hpp"

namespace svehnn {

// Fault injection for harness self-tests: shifts the implementation-side
// quantity before comparison so a healthy check must fail.
enum class Sabotage {
  none,
  relu_mean,
  relu_var,
  bn_mean,
  max_mean,
  linear_var,
  subset_mean,
};

Sabotage sabotage_from_name(const std::string& name);

struct CheckResult {
  std::string name;
  double expected = 0.0;  // closed-form implementation value
  double observed = 0.0;  // Monte-Carlo oracle value
  double se = 0.0;        // oracle standard error
  bool pass = false;
};

struct VerifyConfig {
  std::uint64_t seed = 0;
  int n_configs = 20;
  std::int64_t samples = 1'000'000;
  std::int64_t subset_samples = 50'000;
  Sabotage sabotage = Sabotage::none;
  int threads = 1;
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  std::map<std::string, std::uint64_t> clamp_counts;  // per variance mode
  bool all_pass = true;
};

// Empirical moments with standard errors for both the mean and the variance.
struct MomentEstimate {
  double mean = 0.0;
  double var = 0.0;
  double se_mean = 0.0;
  double se_var = 0.0;
  std::int64_t n = 0;
};

// Oracle helpers: these draw samples and push them through the deterministic
// layer ops only, never through the probabilistic closed forms they check.
MomentEstimate mc_relu_moments(const Gaussian& in, std::int64_t samples, Rng& rng);
MomentEstimate mc_batchnorm_moments(const Gaussian& in, const BatchNormParams& bn,
                                    int channel, std::int64_t samples, Rng& rng);
MomentEstimate mc_max_pair_moments(const Gaussian& a, const Gaussian& b,
                                   std::int64_t samples, Rng& rng);
MomentEstimate mc_linear_moments(const GaussianVector& in,
                                 const DenseLayerParams& params, int out_unit,
                                 std::int64_t samples, Rng& rng);
MomentEstimate mc_maxpool_moments(const std::vector<Gaussian>& in,
                                  std::int64_t samples, Rng& rng);

// Empirical mean of the deterministic logit over random subsets of fixed
// size drawn uniformly from the whole feature set, with forced features
// overridden after the draw.
MomentEstimate mc_subset_logit(const HeterogeneousInput& z,
                               const WdpnModel& model, const SubsetSpec& spec,
                               std::int64_t draws, Rng& rng);

// Small heterogeneous model in a regime where the Gaussian propagation is
// expected to track subset sampling closely; used by the end-to-end checks.
WdpnModel build_verification_model(std::uint64_t seed, int k = 5, int d = 3);
HeterogeneousInput build_verification_input(std::uint64_t seed, int k = 5,
                                            int d = 3);

VerifyReport run_probabilistic_checks(const VerifyConfig& config);

nlohmann::json verify_report_to_json(const VerifyReport& report);

}  // namespace svehnn
