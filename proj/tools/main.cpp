#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "svehnn/attribution.hpp"
#include "svehnn/benchmark.hpp"
#include "svehnn/datagen.hpp"
#include "svehnn/hull.hpp"
#include "svehnn/model_io.hpp"
#include "svehnn/report.hpp"
#include "svehnn/training.hpp"
#include "svehnn/verify.hpp"
#include "svehnn/version.hpp"

namespace {

using nlohmann::json;
using namespace svehnn;

constexpr int kExitOk = 0;
constexpr int kExitCheckFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitRefused = 3;

struct GenDataArgs {
  std::string task = "xi";
  int n = 100;
  std::uint64_t seed = 0;
  double jitter = 0.05;
  int k = 16;
  int d = 4;
  int informative = -1;
  std::string out;
};

struct TrainArgs {
  std::string data;
  std::string out_model;
  std::string out_report;
  std::uint64_t seed = 0;
  int epochs = 40;
  int batch_size = 32;
  double learning_rate = 1e-3;
  std::string optimizer = "adam";
  std::string widths = "32,64";
  double holdout = 0.25;
  double init_scale = 1.0;
};

struct ExplainArgs {
  std::string model;
  std::string data;
  std::string input;
  int index = 0;
  std::string estimator;
  std::string baseline = "zero";
  std::int64_t m = 2000;
  std::uint64_t seed = 0;
  std::string variance_mode = "as_written";
  int threads = 1;
  std::string out;
};

struct VerifyArgs {
  std::uint64_t seed = 0;
  std::int64_t samples = 1'000'000;
  int configs = 20;
  std::int64_t subset_samples = 50'000;
  std::string sabotage = "none";
  int threads = 1;
  std::string out;
};

struct BenchmarkArgs {
  std::string data;
  std::string model;
  std::uint64_t seed = 0;
  int examples = 100;
  std::string baseline = "zero";
  std::int64_t m_converged = 2000;
  bool svehnn_both = false;
  int threads = 1;
  std::string out_csv;
  std::string out_json;
};

std::vector<int> parse_widths(const std::string& text) {
  std::vector<int> out;
  std::string token;
  for (char c : text) {
    if (c == ',') {
      if (!token.empty()) out.push_back(std::stoi(token));
      token.clear();
    } else {
      token.push_back(c);
    }
  }
  if (!token.empty()) out.push_back(std::stoi(token));
  if (out.empty()) throw ParseError("--widths: expected a comma-separated list");
  return out;
}

BaselineSpec resolve_baseline(const std::string& kind,
                              const std::string& data_path) {
  if (kind == "zero") return BaselineSpec::zero_baseline();
  if (kind != "hull") throw ParseError("--baseline must be zero or hull");
  if (data_path.empty())
    throw ParseError("hull baseline needs --data to build the template");
  const Dataset dataset = read_dataset(data_path);
  std::vector<PointCloud> clouds;
  clouds.reserve(dataset.examples.size());
  for (const auto& ex : dataset.examples) clouds.push_back(ex.input.cloud);
  const HullTemplateResult tpl = hull_template(clouds);
  if (tpl.degenerate)
    std::cerr << "note: degenerate hull, template from bounding box\n";
  return BaselineSpec::hull_baseline(tpl.cloud);
}

HeterogeneousInput read_standalone_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open input file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError("input file " + path + ": " + e.what());
  }
  HeterogeneousInput z;
  try {
    for (const auto& p : j.at("points")) {
      z.cloud.points.push_back(
          Point3{p.at(0).get<double>(), p.at(1).get<double>(),
                 p.at(2).get<double>()});
    }
    if (j.contains("tabular")) z.tabular.values = j.at("tabular").get<Vec>();
  } catch (const json::exception& e) {
    throw ParseError("input file " + path + ": " + e.what());
  }
  return z;
}

int cmd_gen_data(const GenDataArgs& args) {
  Dataset dataset;
  if (args.task == "xi") {
    dataset = generate_xi(args.n, args.seed, args.jitter);
  } else if (args.task == "hetero") {
    dataset = generate_hetero(args.n, args.k, args.d, args.seed,
                              args.informative);
  } else {
    throw ParseError("--task must be xi or hetero");
  }
  write_dataset(dataset, args.out);
  json manifest{{"generator", dataset.manifest.generator},
                {"n_examples", dataset.manifest.n_examples},
                {"K", dataset.manifest.k_points},
                {"D", dataset.manifest.d_tabular},
                {"seed", dataset.manifest.seed},
                {"class_counts", dataset.manifest.class_counts},
                {"out", args.out}};
  std::cout << manifest.dump() << "\n";
  return kExitOk;
}

int cmd_train(const TrainArgs& args) {
  const Dataset dataset = read_dataset(args.data);
  TrainConfig config;
  config.epochs = args.epochs;
  config.batch_size = args.batch_size;
  config.learning_rate = args.learning_rate;
  config.seed = args.seed;
  config.holdout_fraction = args.holdout;
  config.init_scale = args.init_scale;
  if (args.optimizer == "adam") {
    config.optimizer = Optimizer::adam;
  } else if (args.optimizer == "sgd") {
    config.optimizer = Optimizer::sgd;
  } else {
    throw ParseError("--optimizer must be adam or sgd");
  }
  ArchSpec arch;
  arch.point_mlp_widths = parse_widths(args.widths);

  auto [model, report] = train(dataset.examples, dataset.manifest.k_points,
                               dataset.manifest.d_tabular, arch, config);
  save_model(model, args.out_model);

  const json config_echo{{"data", args.data},
                         {"epochs", args.epochs},
                         {"batch_size", args.batch_size},
                         {"learning_rate", args.learning_rate},
                         {"optimizer", args.optimizer},
                         {"widths", args.widths},
                         {"holdout", args.holdout},
                         {"init_scale", args.init_scale}};
  json doc{{"meta", make_meta(args.seed, model_checksum(model), config_echo)},
           {"timing", timing_block(json::object())},
           {"epoch_loss", report.epoch_loss},
           {"balanced_accuracy", report.balanced_accuracy},
           {"parameter_checksum", report.parameter_checksum},
           {"train_size", report.train_size},
           {"holdout_size", report.holdout_size}};
  const std::string report_path =
      args.out_report.empty() ? args.out_model + ".report.json"
                              : args.out_report;
  write_json_file(doc, report_path);
  std::cout << "balanced_accuracy=" << report.balanced_accuracy << " model="
            << args.out_model << " report=" << report_path << "\n";
  return kExitOk;
}

int cmd_explain(const ExplainArgs& args) {
  const WdpnModel model = load_model(args.model);
  HeterogeneousInput z;
  if (!args.input.empty()) {
    z = read_standalone_input(args.input);
  } else {
    if (args.data.empty())
      throw ParseError("explain needs --data with --index, or --input");
    const Dataset dataset = read_dataset(args.data);
    if (args.index < 0 ||
        args.index >= static_cast<int>(dataset.examples.size()))
      throw ParseError("--index out of range");
    z = dataset.examples[static_cast<std::size_t>(args.index)].input;
  }
  const BaselineSpec baseline = resolve_baseline(args.baseline, args.data);
  const VarianceMode mode = variance_mode_from_name(args.variance_mode);
  const WdpnLogit f(model);

  ExplainerConfig config;
  config.m = args.m;
  config.seed = args.seed;
  config.variance_mode = mode;

  Attribution attribution;
  if (args.estimator == "exact") {
    attribution = exact_shapley(z, f, baseline, args.threads);
  } else if (args.estimator == "sampling") {
    attribution = shapley_sampling(z, f, baseline, config, args.threads);
  } else if (args.estimator == "occlusion") {
    attribution = occlusion(z, f, baseline);
  } else if (args.estimator == "svehnn") {
    attribution = svehnn_full(z, model, baseline, mode, args.threads);
  } else if (args.estimator == "svehnn-mc") {
    attribution = svehnn_mc(z, model, baseline, config, args.threads);
  } else {
    throw ParseError(
        "--estimator must be exact, sampling, occlusion, svehnn, or svehnn-mc");
  }

  const json config_echo{{"estimator", args.estimator},
                         {"baseline", args.baseline},
                         {"m", args.m},
                         {"variance_mode", args.variance_mode},
                         {"index", args.index}};
  json doc = attribution_report(attribution, z, model.k_points,
                                model.d_tabular);
  doc["meta"] = make_meta(args.seed, model_checksum(model), config_echo);
  doc["timing"] = timing_block(json{{"threads", args.threads}});
  write_json_file(doc, args.out);
  std::cout << "estimator=" << attribution.estimator
            << " evaluations=" << attribution.evaluations << " out="
            << args.out << "\n";
  return kExitOk;
}

int cmd_verify_prob(const VerifyArgs& args) {
  VerifyConfig config;
  config.seed = args.seed;
  config.samples = args.samples;
  config.n_configs = args.configs;
  config.subset_samples = args.subset_samples;
  config.sabotage = sabotage_from_name(args.sabotage);
  config.threads = args.threads;

  const VerifyReport report = run_probabilistic_checks(config);
  int failures = 0;
  for (const auto& c : report.checks) {
    if (!c.pass) {
      ++failures;
      std::printf("[FAIL] %s expected=%.8g observed=%.8g se=%.3g\n",
                  c.name.c_str(), c.expected, c.observed, c.se);
    }
  }
  std::printf("checks=%zu failures=%d\n", report.checks.size(), failures);
  for (const auto& [mode, count] : report.clamp_counts)
    std::printf("variance_clamps[%s]=%llu\n", mode.c_str(),
                static_cast<unsigned long long>(count));

  if (!args.out.empty()) {
    const json config_echo{{"samples", args.samples},
                           {"configs", args.configs},
                           {"subset_samples", args.subset_samples},
                           {"sabotage", args.sabotage}};
    json doc = verify_report_to_json(report);
    doc["meta"] = make_meta(args.seed, "", config_echo);
    doc["timing"] = timing_block(json{{"threads", args.threads}});
    write_json_file(doc, args.out);
  }
  return report.all_pass ? kExitOk : kExitCheckFailure;
}

int cmd_benchmark(const BenchmarkArgs& args) {
  const Dataset dataset = read_dataset(args.data);
  const WdpnModel model = load_model(args.model);
  if (args.examples < 1) throw ParseError("--examples must be >= 1");
  const std::size_t n = std::min<std::size_t>(
      dataset.examples.size(), static_cast<std::size_t>(args.examples));
  const std::vector<LabeledExample> slice(dataset.examples.begin(),
                                          dataset.examples.begin() + n);
  const BaselineSpec baseline = resolve_baseline(args.baseline, args.data);
  const int f = model.num_features();

  std::vector<EstimatorSpec> specs;
  specs.push_back({EstimatorSpec::Kind::exact, "exact", 0, args.seed,
                   VarianceMode::as_written});
  specs.push_back({EstimatorSpec::Kind::sampling,
                   "sampling_m" + std::to_string(args.m_converged),
                   args.m_converged, args.seed, VarianceMode::as_written});
  const std::int64_t budget_m = 2 * f;  // same evaluation budget as svehnn
  specs.push_back({EstimatorSpec::Kind::sampling,
                   "sampling_m" + std::to_string(budget_m), budget_m,
                   args.seed + 1, VarianceMode::as_written});
  specs.push_back({EstimatorSpec::Kind::occlusion, "occlusion", 0, args.seed,
                   VarianceMode::as_written});
  specs.push_back({EstimatorSpec::Kind::svehnn_full, "svehnn", 0, args.seed,
                   VarianceMode::as_written});
  if (args.svehnn_both) {
    specs.push_back({EstimatorSpec::Kind::svehnn_full, "svehnn_bernoulli", 0,
                     args.seed, VarianceMode::bernoulli_point});
  }

  BenchmarkRun run = benchmark(slice, model, specs, baseline, args.threads);
  run.dataset_id = dataset.manifest.id();

  const json config_echo{{"data", args.data},
                         {"examples", static_cast<std::int64_t>(n)},
                         {"baseline", args.baseline},
                         {"m_converged", args.m_converged},
                         {"svehnn_both", args.svehnn_both}};
  const std::string meta_comment =
      "# tool_version=" + std::string(kVersion) + "\n# seed=" +
      std::to_string(args.seed) + "\n# model_checksum=" + run.model_checksum +
      "\n# config=" + config_echo.dump() + "\n";
  const std::string csv = meta_comment + benchmark_csv(run);
  if (!args.out_csv.empty()) {
    write_text_file(csv, args.out_csv);
  } else {
    std::cout << csv;
  }
  if (!args.out_json.empty()) {
    json wall = json::object();
    for (std::size_t i = 0; i < run.reports.size(); ++i)
      wall[run.reports[i].estimator] = run.wall_seconds[i];
    json doc = benchmark_to_json(run, true);
    doc["meta"] = make_meta(args.seed, run.model_checksum, config_echo);
    doc["timing"] = timing_block(json{{"wall_clock_seconds", wall}, {"threads", args.threads}});
    write_json_file(doc, args.out_json);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shapley-value attribution for point-cloud + tabular networks"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  GenDataArgs gen_args;
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
  gen->add_option("--task", gen_args.task, "xi or hetero");
  gen->add_option("--n", gen_args.n, "number of examples")->required();
  gen->add_option("--seed", gen_args.seed, "generator seed")->required();
  gen->add_option("--jitter", gen_args.jitter, "xi point jitter");
  gen->add_option("--k", gen_args.k, "hetero: points per cloud");
  gen->add_option("--d", gen_args.d, "hetero: tabular columns");
  gen->add_option("--informative", gen_args.informative,
                  "hetero: informative columns (default D/2)");
  gen->add_option("--out", gen_args.out, "output dataset path")->required();

  TrainArgs train_args;
  auto* tr = app.add_subcommand("train", "train a classifier");
  tr->add_option("--data", train_args.data, "dataset path")->required();
  tr->add_option("--out-model", train_args.out_model, "model output path")
      ->required();
  tr->add_option("--out-report", train_args.out_report, "report output path");
  tr->add_option("--seed", train_args.seed, "training seed")->required();
  tr->add_option("--epochs", train_args.epochs, "epochs");
  tr->add_option("--batch", train_args.batch_size, "batch size");
  tr->add_option("--lr", train_args.learning_rate, "learning rate");
  tr->add_option("--optimizer", train_args.optimizer, "adam or sgd");
  tr->add_option("--widths", train_args.widths, "point MLP widths, e.g. 32,64");
  tr->add_option("--holdout", train_args.holdout, "held-out fraction");
  tr->add_option("--init-scale", train_args.init_scale, "weight init scale");

  ExplainArgs explain_args;
  auto* ex = app.add_subcommand("explain", "explain one example");
  ex->add_option("--model", explain_args.model, "model path")->required();
  ex->add_option("--data", explain_args.data, "dataset path");
  ex->add_option("--input", explain_args.input, "standalone input JSON");
  ex->add_option("--index", explain_args.index, "example index in --data");
  ex->add_option("--estimator", explain_args.estimator,
                 "exact, sampling, occlusion, svehnn, svehnn-mc")
      ->required();
  ex->add_option("--baseline", explain_args.baseline, "zero or hull");
  ex->add_option("--m", explain_args.m, "Monte-Carlo budget");
  ex->add_option("--seed", explain_args.seed, "run seed");
  ex->add_option("--variance-mode", explain_args.variance_mode,
                 "as_written or bernoulli_point");
  ex->add_option("--threads", explain_args.threads, "worker threads");
  ex->add_option("--out", explain_args.out, "attribution report path")
      ->required();

  VerifyArgs verify_args;
  auto* ver = app.add_subcommand("verify-prob",
                                 "check probabilistic layers against "
                                 "Monte-Carlo oracles");
  ver->add_option("--seed", verify_args.seed, "run seed")->required();
  ver->add_option("--samples", verify_args.samples, "samples per layer check");
  ver->add_option("--configs", verify_args.configs, "random configurations");
  ver->add_option("--subset-samples", verify_args.subset_samples,
                  "subset draws for the end-to-end check");
  ver->add_option("--sabotage", verify_args.sabotage,
                  "inject a fault (harness self-test)");
  ver->add_option("--threads", verify_args.threads, "worker threads");
  ver->add_option("--out", verify_args.out, "verification report path");

  BenchmarkArgs bench_args;
  auto* bench = app.add_subcommand("benchmark",
                                   "compare estimators against the exact "
                                   "oracle");
  bench->add_option("--data", bench_args.data, "dataset path")->required();
  bench->add_option("--model", bench_args.model, "model path")->required();
  bench->add_option("--seed", bench_args.seed, "run seed")->required();
  bench->add_option("--examples", bench_args.examples, "examples to score");
  bench->add_option("--baseline", bench_args.baseline, "zero or hull");
  bench->add_option("--m-converged", bench_args.m_converged,
                    "budget for the converged sampling row");
  bench->add_flag("--svehnn-both", bench_args.svehnn_both,
                  "add a row for the bernoulli_point variance mode");
  bench->add_option("--threads", bench_args.threads, "worker threads");
  bench->add_option("--out-csv", bench_args.out_csv, "CSV output path");
  bench->add_option("--out-json", bench_args.out_json, "JSON output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(gen_args);
    if (tr->parsed()) return cmd_train(train_args);
    if (ex->parsed()) return cmd_explain(explain_args);
    if (ver->parsed()) return cmd_verify_prob(verify_args);
    if (bench->parsed()) return cmd_benchmark(bench_args);
    std::cerr << "no subcommand given\n";
    return kExitUsage;
  } catch (const RefusalError& e) {
    std::cerr << "refused: " << e.what() << "\n";
    return kExitRefused;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IntegrityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "failed: " << e.what() << "\n";
    return kExitCheckFailure;
  }
}
