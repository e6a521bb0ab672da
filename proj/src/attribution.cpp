#include "svehnn/attribution.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "svehnn/parallel.hpp"
#include "svehnn/rng.hpp"

namespace svehnn {

int Coalition::count() const {
  int c = 0;
  for (std::uint64_t w : words_) c += std::popcount(w);
  return c;
}

HeterogeneousInput masked_input(const HeterogeneousInput& z, const Coalition& s,
                                const BaselineSpec& baseline) {
  const int k = z.cloud.size();
  const int d = z.tabular.size();
  if (s.size() != k + d) throw ShapeError("masked_input: coalition size mismatch");
  HeterogeneousInput out = z;
  for (int j = 0; j < k; ++j) {
    if (!s.test(j)) out.cloud.points[j] = baseline_point(baseline, j, k);
  }
  for (int i = 0; i < d; ++i) {
    if (!s.test(k + i)) out.tabular.values[i] = 0.0;
  }
  return out;
}

double coalition_value(const Coalition& s, const HeterogeneousInput& z,
                       const LogitModel& model, const BaselineSpec& baseline,
                       EvalCounter* counter) {
  const double f_s = model.logit(masked_input(z, s, baseline), counter);
  const double f_bl = model.logit(baseline_input(z, baseline), counter);
  return f_s - f_bl;
}

namespace {

int feature_count(const LogitModel& model) {
  return model.num_points() + model.num_tabular();
}

void check_input(const HeterogeneousInput& z, int k, int d) {
  if (z.cloud.size() != k || z.tabular.size() != d)
    throw ShapeError("explainer: input does not match the model's dimensions");
}

}  // namespace

Attribution exact_shapley(const HeterogeneousInput& z, const LogitModel& model,
                          const BaselineSpec& baseline, int threads) {
  const int f = feature_count(model);
  if (f < 1) throw DomainError("exact_shapley: empty feature space");
  if (f > kExactFeatureCap)
    throw RefusalError(
        "exact_shapley: " + std::to_string(f) + " features would need 2^" +
        std::to_string(f) +
        " evaluations; use sampling, occlusion, or svehnn instead");
  check_input(z, model.num_points(), model.num_tabular());

  EvalCounter evals;
  const std::size_t n = std::size_t{1} << f;
  std::vector<double> value(n);
  parallel_for(n, threads, [&](std::size_t mask) {
    value[mask] = model.logit(
        masked_input(z, Coalition::from_mask(mask, f), baseline), &evals);
  });
  const double f_bl = model.logit(baseline_input(z, baseline), &evals);
  const double f_z = model.logit(z, &evals);

  // per-size weights |S|! (|F|-|S|-1)! / |F|!, in log space
  std::vector<double> weight(f);
  for (int s = 0; s < f; ++s) {
    weight[s] = std::exp(std::lgamma(s + 1.0) + std::lgamma(f - s + 0.0) -
                         std::lgamma(f + 1.0));
  }

  Attribution out;
  out.values.assign(f, 0.0);
  for (int i = 0; i < f; ++i) {
    const std::uint64_t bit = std::uint64_t{1} << i;
    double acc = 0.0;
    for (std::uint64_t mask = 0; mask < n; ++mask) {
      if (mask & bit) continue;
      acc += weight[std::popcount(mask)] * (value[mask | bit] - value[mask]);
    }
    out.values[i] = acc;
  }
  out.estimator = "exact";
  out.baseline = baseline.kind;
  out.evaluations = evals.count();  // 2^F coalitions + the two passes below
  out.f_z = f_z;
  out.f_baseline = f_bl;
  out.diagnostics["bookkeeping_passes"] = 2.0;
  return out;
}

Attribution shapley_sampling(const HeterogeneousInput& z,
                             const LogitModel& model,
                             const BaselineSpec& baseline,
                             const ExplainerConfig& config, int threads) {
  const int f = feature_count(model);
  if (f < 1) throw DomainError("shapley_sampling: empty feature space");
  if (config.m < 1) throw DomainError("shapley_sampling: M must be >= 1");
  check_input(z, model.num_points(), model.num_tabular());

  EvalCounter evals;
  const double f_bl = model.logit(baseline_input(z, baseline), nullptr);
  const std::size_t m = static_cast<std::size_t>(config.m);
  std::vector<double> marginals(m * static_cast<std::size_t>(f));
  parallel_for(m, threads, [&](std::size_t perm_index) {
    Rng rng = Rng::substream(config.seed, perm_index);
    std::vector<int> order(f);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    Coalition prefix(f);
    double prev = f_bl;
    for (int t = 0; t < f; ++t) {
      prefix.set(order[t]);
      const double v = model.logit(masked_input(z, prefix, baseline), &evals);
      marginals[perm_index * f + order[t]] = v - prev;
      prev = v;
    }
  });

  Attribution out;
  out.values.assign(f, 0.0);
  for (std::size_t p = 0; p < m; ++p) {
    for (int i = 0; i < f; ++i) out.values[i] += marginals[p * f + i];
  }
  for (double& v : out.values) v /= static_cast<double>(m);
  out.estimator = "sampling";
  out.baseline = baseline.kind;
  out.evaluations = evals.count();
  out.f_z = model.logit(z, nullptr);
  out.f_baseline = f_bl;
  return out;
}

Attribution occlusion(const HeterogeneousInput& z, const LogitModel& model,
                      const BaselineSpec& baseline) {
  const int f = feature_count(model);
  if (f < 1) throw DomainError("occlusion: empty feature space");
  check_input(z, model.num_points(), model.num_tabular());

  EvalCounter evals;
  const double f_z = model.logit(z, &evals);
  Attribution out;
  out.values.assign(f, 0.0);
  Coalition all = Coalition::full(f);
  for (int i = 0; i < f; ++i) {
    Coalition without = all;
    without.reset(i);
    out.values[i] =
        f_z - model.logit(masked_input(z, without, baseline), &evals);
  }
  out.estimator = "occlusion";
  out.baseline = baseline.kind;
  out.evaluations = evals.count();
  out.f_z = f_z;
  out.f_baseline = model.logit(baseline_input(z, baseline), nullptr);
  return out;
}

Attribution svehnn_from_draws(const HeterogeneousInput& z,
                              const WdpnModel& model,
                              const BaselineSpec& baseline, VarianceMode mode,
                              const std::vector<std::vector<int>>& draws,
                              int threads) {
  const int f = model.num_features();
  if (static_cast<int>(draws.size()) != f)
    throw ShapeError("svehnn: one draw list per feature required");
  check_input(z, model.k_points, model.d_tabular);
  const ProbWdpnModel prob = lift_model(model, mode);

  EvalCounter prob_evals;
  std::vector<ProbDiagnostics> diags(f);
  Attribution out;
  out.values.assign(f, 0.0);
  parallel_for(static_cast<std::size_t>(f), threads, [&](std::size_t i) {
    const auto& ks = draws[i];
    double acc = 0.0;
    for (int k : ks) {
      acc += expectation_difference(static_cast<int>(i), k, z, prob, baseline,
                                    &prob_evals, &diags[i]);
    }
    out.values[i] = ks.empty() ? 0.0 : acc / static_cast<double>(ks.size());
  });

  ProbDiagnostics merged;
  for (const auto& d : diags) {
    merged.variance_clamps += d.variance_clamps;
    merged.fold_sensitivity = std::max(merged.fold_sensitivity, d.fold_sensitivity);
    merged.max_output_variance =
        std::max(merged.max_output_variance, d.max_output_variance);
  }
  out.baseline = baseline.kind;
  out.evaluations = prob_evals.count();
  out.f_z = wdpn_forward(z, model, nullptr);
  out.f_baseline = wdpn_forward(baseline_input(z, baseline), model, nullptr);
  out.diagnostics["variance_clamps"] = static_cast<double>(merged.variance_clamps);
  out.diagnostics["fold_order_sensitivity"] = merged.fold_sensitivity;
  out.diagnostics["max_output_variance"] = merged.max_output_variance;
  return out;
}

Attribution svehnn_full(const HeterogeneousInput& z, const WdpnModel& model,
                        const BaselineSpec& baseline, VarianceMode mode,
                        int threads) {
  const int f = model.num_features();
  std::vector<int> all_sizes(f);
  std::iota(all_sizes.begin(), all_sizes.end(), 0);  // k = 0 .. |F|-1
  Attribution out = svehnn_from_draws(
      z, model, baseline, mode, std::vector<std::vector<int>>(f, all_sizes),
      threads);
  out.estimator = "svehnn";
  return out;
}

Attribution svehnn_mc(const HeterogeneousInput& z, const WdpnModel& model,
                      const BaselineSpec& baseline,
                      const ExplainerConfig& config, int threads) {
  if (config.m < 1) throw DomainError("svehnn_mc: M must be >= 1");
  const int f = model.num_features();
  std::vector<std::vector<int>> draws(f);
  for (int i = 0; i < f; ++i) {
    Rng rng = Rng::substream(config.seed, static_cast<std::uint64_t>(i));
    draws[i].reserve(static_cast<std::size_t>(config.m));
    for (std::int64_t s = 0; s < config.m; ++s)
      draws[i].push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(f))));
  }
  Attribution out =
      svehnn_from_draws(z, model, baseline, config.variance_mode, draws, threads);
  out.estimator = "svehnn_mc";
  return out;
}

}  // namespace svehnn
