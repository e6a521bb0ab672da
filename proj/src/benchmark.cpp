#include "svehnn/benchmark.hpp"

#include <chrono>
#include <cstdio>

#include "svehnn/model_io.hpp"
#include "svehnn/parallel.hpp"
#include "svehnn/rng.hpp"

namespace svehnn {

using nlohmann::json;

Attribution run_estimator(const EstimatorSpec& spec,
                          const HeterogeneousInput& z, const WdpnModel& model,
                          const BaselineSpec& baseline,
                          std::uint64_t example_index, int threads) {
  const WdpnLogit f(model);
  ExplainerConfig config;
  config.m = spec.m;
  config.seed = Rng::mix(spec.seed + 0x9E3779B97F4A7C15ULL * (example_index + 1));
  config.variance_mode = spec.variance_mode;
  switch (spec.kind) {
    case EstimatorSpec::Kind::exact:
      return exact_shapley(z, f, baseline, threads);
    case EstimatorSpec::Kind::sampling:
      return shapley_sampling(z, f, baseline, config, threads);
    case EstimatorSpec::Kind::occlusion:
      return occlusion(z, f, baseline);
    case EstimatorSpec::Kind::svehnn_full:
      return svehnn_full(z, model, baseline, spec.variance_mode, threads);
    case EstimatorSpec::Kind::svehnn_mc:
      return svehnn_mc(z, model, baseline, config, threads);
  }
  throw DomainError("unknown estimator kind");
}

namespace {

MetricReport score(const std::string& id,
                   const std::vector<Attribution>& estimates,
                   const std::vector<Attribution>& truth) {
  MetricReport report;
  report.estimator = id;
  const std::size_t n = estimates.size();
  report.mse_values.reserve(n);
  report.src_values.reserve(n);
  report.ndcg_values.reserve(n);
  double mse_acc = 0.0, src_acc = 0.0, ndcg_acc = 0.0;
  int src_n = 0;
  for (std::size_t e = 0; e < n; ++e) {
    const double m = mse(estimates[e].values, truth[e].values);
    const auto s = spearman(estimates[e].values, truth[e].values);
    const double g = ndcg(estimates[e].values, truth[e].values);
    report.mse_values.push_back(m);
    report.src_values.push_back(s);
    report.ndcg_values.push_back(g);
    mse_acc += m;
    ndcg_acc += g;
    if (s) {
      src_acc += *s;
      ++src_n;
    } else {
      ++report.src_excluded;
    }
    if (e == 0) {
      report.ne = estimates[e].evaluations;
    } else if (estimates[e].evaluations != report.ne) {
      throw std::runtime_error("estimator " + id +
                               ": evaluation count varies across examples");
    }
  }
  report.mse_mean = mse_acc / static_cast<double>(n);
  report.ndcg_mean = ndcg_acc / static_cast<double>(n);
  if (src_n > 0) report.src_mean = src_acc / static_cast<double>(src_n);
  report.mse_median = median(report.mse_values);
  report.ndcg_median = median(report.ndcg_values);
  std::vector<double> src_defined;
  for (const auto& s : report.src_values)
    if (s) src_defined.push_back(*s);
  if (!src_defined.empty()) report.src_median = median(std::move(src_defined));
  return report;
}

std::string truth_checksum(const std::vector<Attribution>& truth) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& a : truth) h = hash_doubles(a.values, h);
  return checksum_string(h);
}

}  // namespace

BenchmarkRun benchmark(const std::vector<LabeledExample>& examples,
                       const WdpnModel& model,
                       const std::vector<EstimatorSpec>& estimators,
                       const BaselineSpec& baseline, int threads) {
  if (examples.empty()) throw DomainError("benchmark: no examples");
  model.validate();
  const int f = model.num_features();
  if (f > kExactFeatureCap)
    throw RefusalError("benchmark: feature space too large for the exact oracle");

  BenchmarkRun run;
  run.model_checksum = model_checksum(model);
  run.baseline = baseline.kind;
  run.n_examples = static_cast<std::int64_t>(examples.size());
  run.n_features = f;
  for (const auto& layer : model.point_mlp)
    run.model_point_mlp_widths.push_back(layer.dense.out_dim);
  run.latent_dim = model.latent_dim();

  const WdpnLogit logit(model);
  std::vector<Attribution> truth(examples.size());
  parallel_for(examples.size(), threads, [&](std::size_t e) {
    truth[e] = exact_shapley(examples[e].input, logit, baseline, 1);
  });
  run.ground_truth_checksum = truth_checksum(truth);

  for (const auto& spec : estimators) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<Attribution> estimates(examples.size());
    try {
      if (spec.kind == EstimatorSpec::Kind::exact) {
        estimates = truth;  // shared ground truth is also the exact row
      } else {
        parallel_for(examples.size(), threads, [&](std::size_t e) {
          estimates[e] = run_estimator(spec, examples[e].input, model,
                                       baseline, e, 1);
        });
      }
    } catch (const std::exception& err) {
      throw std::runtime_error("benchmark: estimator " + spec.id +
                               " failed: " + err.what());
    }
    run.reports.push_back(score(spec.id, estimates, truth));
    run.seeds.push_back(spec.seed);
    const auto t1 = std::chrono::steady_clock::now();
    run.wall_seconds.push_back(
        std::chrono::duration<double>(t1 - t0).count());
  }
  return run;
}

std::vector<MetricReport> convergence_curve(
    const EstimatorSpec& estimator, const std::vector<std::int64_t>& budgets,
    const std::vector<LabeledExample>& examples, const WdpnModel& model,
    const BaselineSpec& baseline, int threads) {
  for (std::size_t i = 1; i < budgets.size(); ++i) {
    if (budgets[i] <= budgets[i - 1])
      throw DomainError("convergence_curve: budgets must ascend");
  }
  std::vector<EstimatorSpec> specs;
  for (std::int64_t m : budgets) {
    EstimatorSpec s = estimator;
    s.m = m;
    s.id = estimator.id + "_m" + std::to_string(m);
    specs.push_back(std::move(s));
  }
  return benchmark(examples, model, specs, baseline, threads).reports;
}

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return std::string(buf);
}

}  // namespace

std::string benchmark_csv(const BenchmarkRun& run) {
  std::string out;
  out += "estimator,mse,src,ndcg,ne\n";
  for (const auto& r : run.reports) {
    out += r.estimator;
    out += ',';
    out += format_double(r.mse_mean);
    out += ',';
    out += r.src_mean ? format_double(*r.src_mean) : "nan";
    out += ',';
    out += format_double(r.ndcg_mean);
    out += ',';
    out += std::to_string(r.ne);
    out += '\n';
  }
  return out;
}

nlohmann::json benchmark_to_json(const BenchmarkRun& run, bool per_example) {
  json estimators = json::array();
  for (std::size_t ri = 0; ri < run.reports.size(); ++ri) {
    const auto& r = run.reports[ri];
    json row{{"estimator", r.estimator},
             {"seed", ri < run.seeds.size() ? run.seeds[ri] : 0},
             {"ne", r.ne},
             {"mse_mean", r.mse_mean},
             {"ndcg_mean", r.ndcg_mean},
             {"mse_median", r.mse_median},
             {"ndcg_median", r.ndcg_median},
             {"src_excluded", r.src_excluded}};
    row["src_mean"] = r.src_mean ? json(*r.src_mean) : json(nullptr);
    row["src_median"] = r.src_median ? json(*r.src_median) : json(nullptr);
    if (per_example) {
      row["mse"] = r.mse_values;
      json src = json::array();
      for (const auto& s : r.src_values)
        src.push_back(s ? json(*s) : json(nullptr));
      row["src"] = std::move(src);
      row["ndcg"] = r.ndcg_values;
    }
    estimators.push_back(std::move(row));
  }
  return json{{"dataset_id", run.dataset_id},
              {"model_checksum", run.model_checksum},
              {"model_point_mlp_widths", run.model_point_mlp_widths},
              {"latent_dim", run.latent_dim},
              {"baseline", baseline_name(run.baseline)},
              {"src_policy", "signed"},
              {"n_examples", run.n_examples},
              {"n_features", run.n_features},
              {"ground_truth_checksum", run.ground_truth_checksum},
              {"estimators", std::move(estimators)}};
}

}  // namespace svehnn
