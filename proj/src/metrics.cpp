#include "svehnn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace svehnn {

double mse(const std::vector<double>& est, const std::vector<double>& truth) {
  if (est.size() != truth.size())
    throw ShapeError("mse: attribution lengths differ");
  if (est.empty()) throw DomainError("mse: empty attributions");
  double acc = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    const double d = est[i] - truth[i];
    acc += d * d;
  }
  return acc / static_cast<double>(est.size());
}

namespace {

// 1-based ranks, ties receive the average rank of their run
Vec average_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  Vec ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

std::optional<double> spearman(const std::vector<double>& est,
                               const std::vector<double>& truth) {
  if (est.size() != truth.size())
    throw ShapeError("spearman: attribution lengths differ");
  if (est.size() < 2) throw DomainError("spearman: needs at least 2 features");
  const Vec re = average_ranks(est);
  const Vec rt = average_ranks(truth);
  const double n = static_cast<double>(est.size());
  double me = 0.0, mt = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    me += re[i];
    mt += rt[i];
  }
  me /= n;
  mt /= n;
  double cov = 0.0, ve = 0.0, vt = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    const double de = re[i] - me;
    const double dt = rt[i] - mt;
    cov += de * dt;
    ve += de * de;
    vt += dt * dt;
  }
  if (ve <= 0.0 || vt <= 0.0) return std::nullopt;
  return cov / std::sqrt(ve * vt);
}

double ndcg(const std::vector<double>& est, const std::vector<double>& truth,
            bool* degenerate_truth) {
  if (est.size() != truth.size())
    throw ShapeError("ndcg: attribution lengths differ");
  if (est.empty()) throw DomainError("ndcg: empty attributions");
  if (degenerate_truth) *degenerate_truth = false;
  const std::size_t n = est.size();
  auto order_by_abs = [n](const std::vector<double>& v) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return std::abs(v[a]) > std::abs(v[b]);  // stable: lowest index on ties
    });
    return idx;
  };
  const auto by_est = order_by_abs(est);
  const auto by_truth = order_by_abs(truth);
  double dcg = 0.0, idcg = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const double discount = std::log2(static_cast<double>(r) + 2.0);
    dcg += std::abs(truth[by_est[r]]) / discount;
    idcg += std::abs(truth[by_truth[r]]) / discount;
  }
  if (idcg <= 0.0) {
    if (degenerate_truth) *degenerate_truth = true;
    return 1.0;
  }
  return dcg / idcg;
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2]
                    : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace svehnn
