#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "svehnn/attribution.hpp"
#include "svehnn/datagen.hpp"
#include "svehnn/metrics.hpp"

namespace svehnn {

struct EstimatorSpec {
  enum class Kind { exact, sampling, occlusion, svehnn_full, svehnn_mc };
  Kind kind = Kind::exact;
  std::string id = "exact";
  std::int64_t m = 0;          // sampling / svehnn_mc budget
  std::uint64_t seed = 0;      // per-example substreams derive from this
  VarianceMode variance_mode = VarianceMode::as_written;
};

struct BenchmarkRun {
  std::string dataset_id;
  std::string model_checksum;
  BaselineKind baseline = BaselineKind::zero;
  std::vector<MetricReport> reports;
  std::vector<std::uint64_t> seeds;  // parallel to reports
  std::vector<double> wall_seconds;  // parallel to reports; volatile output
  std::string ground_truth_checksum;
  std::int64_t n_examples = 0;
  int n_features = 0;
  std::vector<int> model_point_mlp_widths;
  int latent_dim = 0;
};

// Exact ground truth once per example, every estimator scored against it on
// the same examples. Aborts with context when any estimator fails.
BenchmarkRun benchmark(const std::vector<LabeledExample>& examples,
                       const WdpnModel& model,
                       const std::vector<EstimatorSpec>& estimators,
                       const BaselineSpec& baseline, int threads = 1);

// Metrics per budget against a shared exact ground truth.
std::vector<MetricReport> convergence_curve(
    const EstimatorSpec& estimator, const std::vector<std::int64_t>& budgets,
    const std::vector<LabeledExample>& examples, const WdpnModel& model,
    const BaselineSpec& baseline, int threads = 1);

std::string benchmark_csv(const BenchmarkRun& run);
nlohmann::json benchmark_to_json(const BenchmarkRun& run, bool per_example);

Attribution run_estimator(const EstimatorSpec& spec,
                          const HeterogeneousInput& z, const WdpnModel& model,
                          const BaselineSpec& baseline,
                          std::uint64_t example_index, int threads = 1);

}  // namespace svehnn
