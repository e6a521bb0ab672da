#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "svehnn/attribution.hpp"
#include "svehnn/benchmark.hpp"
#include "svehnn/datagen.hpp"
#include "svehnn/hull.hpp"
#include "svehnn/metrics.hpp"
#include "svehnn/model_io.hpp"
#include "svehnn/report.hpp"
#include "svehnn/training.hpp"
#include "svehnn/version.hpp"

namespace py = pybind11;
using namespace svehnn;

namespace {

HeterogeneousInput make_input(const std::vector<std::array<double, 3>>& points,
                              const std::vector<double>& tabular) {
  HeterogeneousInput z;
  z.cloud.points = points;
  z.tabular.values = tabular;
  return z;
}

BaselineSpec make_baseline(const std::string& kind,
                           const std::optional<std::vector<std::array<double, 3>>>&
                               template_points) {
  if (kind == "zero") return BaselineSpec::zero_baseline();
  if (kind != "hull") throw DomainError("baseline must be zero or hull");
  if (!template_points)
    throw DomainError("hull baseline needs template points");
  PointCloud cloud;
  cloud.points = *template_points;
  return BaselineSpec::hull_baseline(std::move(cloud));
}

py::dict attribution_to_dict(const Attribution& a) {
  py::dict out;
  out["values"] = a.values;
  out["estimator"] = a.estimator;
  out["baseline"] = baseline_name(a.baseline);
  out["evaluations"] = a.evaluations;
  out["f_z"] = a.f_z;
  out["f_baseline"] = a.f_baseline;
  out["diagnostics"] = a.diagnostics;
  return out;
}

py::dict example_to_dict(const LabeledExample& ex) {
  py::dict out;
  out["points"] = ex.input.cloud.points;
  out["tabular"] = ex.input.tabular.values;
  out["label"] = ex.label;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Shapley-value attribution for point-cloud + tabular networks";
  m.attr("__version__") = kVersion;

  py::class_<WdpnModel>(m, "Model")
      .def_property_readonly("k_points",
                             [](const WdpnModel& mdl) { return mdl.k_points; })
      .def_property_readonly("d_tabular",
                             [](const WdpnModel& mdl) { return mdl.d_tabular; })
      .def_property_readonly(
          "latent_dim", [](const WdpnModel& mdl) { return mdl.latent_dim(); })
      .def("checksum", &model_checksum)
      .def("to_json",
           [](const WdpnModel& mdl) { return model_to_json(mdl).dump(); })
      .def("forward",
           [](const WdpnModel& mdl, const std::vector<std::array<double, 3>>& points,
              const std::vector<double>& tabular) {
             return wdpn_forward(make_input(points, tabular), mdl, nullptr);
           },
           py::arg("points"), py::arg("tabular") = std::vector<double>{});

  m.def("load_model", &load_model, py::arg("path"));
  m.def("save_model", &save_model, py::arg("model"), py::arg("path"));
  m.def("model_from_json", [](const std::string& text) {
    return model_from_json(nlohmann::json::parse(text));
  });

  m.def(
      "generate_xi",
      [](int n, std::uint64_t seed, double jitter) {
        const Dataset d = generate_xi(n, seed, jitter);
        py::list out;
        for (const auto& ex : d.examples) out.append(example_to_dict(ex));
        return out;
      },
      py::arg("n"), py::arg("seed"), py::arg("jitter") = 0.05);

  m.def(
      "generate_hetero",
      [](int n, int k, int d, std::uint64_t seed, int informative) {
        const Dataset ds = generate_hetero(n, k, d, seed, informative);
        py::list out;
        for (const auto& ex : ds.examples) out.append(example_to_dict(ex));
        return out;
      },
      py::arg("n"), py::arg("k"), py::arg("d"), py::arg("seed"),
      py::arg("informative") = -1);

  m.def(
      "train",
      [](const std::vector<py::dict>& examples, int k, int d,
         const std::vector<int>& widths, int epochs, int batch_size, double lr,
         std::uint64_t seed, double holdout) {
        std::vector<LabeledExample> data;
        data.reserve(examples.size());
        for (const auto& e : examples) {
          LabeledExample ex;
          ex.input = make_input(
              e["points"].cast<std::vector<std::array<double, 3>>>(),
              e["tabular"].cast<std::vector<double>>());
          ex.label = e["label"].cast<int>();
          data.push_back(std::move(ex));
        }
        ArchSpec arch;
        arch.point_mlp_widths = widths;
        TrainConfig config;
        config.epochs = epochs;
        config.batch_size = batch_size;
        config.learning_rate = lr;
        config.seed = seed;
        config.holdout_fraction = holdout;
        auto [model, report] = train(data, k, d, arch, config);
        py::dict rep;
        rep["epoch_loss"] = report.epoch_loss;
        rep["balanced_accuracy"] = report.balanced_accuracy;
        rep["parameter_checksum"] = report.parameter_checksum;
        return py::make_tuple(model, rep);
      },
      py::arg("examples"), py::arg("k"), py::arg("d"),
      py::arg("widths") = std::vector<int>{32, 64}, py::arg("epochs") = 40,
      py::arg("batch_size") = 32, py::arg("lr") = 1e-3, py::arg("seed") = 0,
      py::arg("holdout") = 0.25);

  m.def(
      "exact_shapley",
      [](const WdpnModel& model, const std::vector<std::array<double, 3>>& points,
         const std::vector<double>& tabular, const std::string& baseline,
         const std::optional<std::vector<std::array<double, 3>>>& template_points,
         int threads) {
        const WdpnLogit f(model);
        return attribution_to_dict(
            exact_shapley(make_input(points, tabular), f,
                          make_baseline(baseline, template_points), threads));
      },
      py::arg("model"), py::arg("points"),
      py::arg("tabular") = std::vector<double>{},
      py::arg("baseline") = "zero", py::arg("template_points") = py::none(),
      py::arg("threads") = 1);

  m.def(
      "shapley_sampling",
      [](const WdpnModel& model, const std::vector<std::array<double, 3>>& points,
         const std::vector<double>& tabular, std::int64_t m_budget,
         std::uint64_t seed, const std::string& baseline,
         const std::optional<std::vector<std::array<double, 3>>>& template_points,
         int threads) {
        const WdpnLogit f(model);
        ExplainerConfig config;
        config.m = m_budget;
        config.seed = seed;
        return attribution_to_dict(shapley_sampling(
            make_input(points, tabular), f,
            make_baseline(baseline, template_points), config, threads));
      },
      py::arg("model"), py::arg("points"),
      py::arg("tabular") = std::vector<double>{}, py::arg("m") = 2000,
      py::arg("seed") = 0, py::arg("baseline") = "zero",
      py::arg("template_points") = py::none(), py::arg("threads") = 1);

  m.def(
      "occlusion",
      [](const WdpnModel& model, const std::vector<std::array<double, 3>>& points,
         const std::vector<double>& tabular, const std::string& baseline,
         const std::optional<std::vector<std::array<double, 3>>>& template_points) {
        const WdpnLogit f(model);
        return attribution_to_dict(
            occlusion(make_input(points, tabular), f,
                      make_baseline(baseline, template_points)));
      },
      py::arg("model"), py::arg("points"),
      py::arg("tabular") = std::vector<double>{},
      py::arg("baseline") = "zero", py::arg("template_points") = py::none());

  m.def(
      "svehnn",
      [](const WdpnModel& model, const std::vector<std::array<double, 3>>& points,
         const std::vector<double>& tabular, const std::string& variance_mode,
         const std::string& baseline,
         const std::optional<std::vector<std::array<double, 3>>>& template_points,
         int threads) {
        return attribution_to_dict(svehnn_full(
            make_input(points, tabular), model,
            make_baseline(baseline, template_points),
            variance_mode_from_name(variance_mode), threads));
      },
      py::arg("model"), py::arg("points"),
      py::arg("tabular") = std::vector<double>{},
      py::arg("variance_mode") = "as_written", py::arg("baseline") = "zero",
      py::arg("template_points") = py::none(), py::arg("threads") = 1);

  m.def(
      "svehnn_mc",
      [](const WdpnModel& model, const std::vector<std::array<double, 3>>& points,
         const std::vector<double>& tabular, std::int64_t m_budget,
         std::uint64_t seed, const std::string& variance_mode,
         const std::string& baseline,
         const std::optional<std::vector<std::array<double, 3>>>& template_points,
         int threads) {
        ExplainerConfig config;
        config.m = m_budget;
        config.seed = seed;
        config.variance_mode = variance_mode_from_name(variance_mode);
        return attribution_to_dict(svehnn_mc(
            make_input(points, tabular), model,
            make_baseline(baseline, template_points), config, threads));
      },
      py::arg("model"), py::arg("points"),
      py::arg("tabular") = std::vector<double>{}, py::arg("m") = 150,
      py::arg("seed") = 0, py::arg("variance_mode") = "as_written",
      py::arg("baseline") = "zero", py::arg("template_points") = py::none(),
      py::arg("threads") = 1);

  m.def("hull_template",
        [](const std::vector<std::vector<std::array<double, 3>>>& clouds) {
          std::vector<PointCloud> dataset;
          dataset.reserve(clouds.size());
          for (const auto& c : clouds) {
            PointCloud cloud;
            cloud.points = c;
            dataset.push_back(std::move(cloud));
          }
          const HullTemplateResult result = hull_template(dataset);
          return py::make_tuple(result.cloud.points, result.degenerate);
        });

  m.def("mse", &mse);
  m.def("spearman", [](const std::vector<double>& est,
                       const std::vector<double>& truth) -> py::object {
    const auto r = spearman(est, truth);
    if (!r) return py::none();
    return py::float_(*r);
  });
  m.def("ndcg", [](const std::vector<double>& est,
                   const std::vector<double>& truth) {
    return ndcg(est, truth);
  });
}
