#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "svehnn/common.hpp"

namespace svehnn {

double mse(const std::vector<double>& est, const std::vector<double>& truth);

// Spearman rank correlation on signed values with average ranks for ties.
// Empty when either rank vector has zero variance.
std::optional<double> spearman(const std::vector<double>& est,
                               const std::vector<double>& truth);

// NDCG with |truth| as gains: features ranked by |est| descending (lowest
// index on ties), position r discounted by log2(r + 1). All-zero truth is 1
// by convention, reported through the flag.
double ndcg(const std::vector<double>& est, const std::vector<double>& truth,
            bool* degenerate_truth = nullptr);

struct MetricReport {
  std::string estimator;
  std::uint64_t ne = 0;  // network evaluations per example
  double mse_mean = 0.0;
  std::optional<double> src_mean;
  double ndcg_mean = 0.0;
  double mse_median = 0.0;
  std::optional<double> src_median;
  double ndcg_median = 0.0;
  int src_excluded = 0;  // examples with undefined rank correlation
  std::vector<double> mse_values;
  std::vector<std::optional<double>> src_values;
  std::vector<double> ndcg_values;
};

double median(std::vector<double> values);

}  // namespace svehnn
