#include "svehnn/datagen.hpp"

#include <cmath>
#include <fstream>

#include "svehnn/rng.hpp"
#include "svehnn/version.hpp"

namespace svehnn {

using nlohmann::json;

std::string DatasetManifest::id() const {
  return generator + ":n=" + std::to_string(n_examples) +
         ":seed=" + std::to_string(seed);
}

Dataset generate_xi(int n, std::uint64_t seed, double jitter) {
  if (n < 2) throw DomainError("generate_xi: need at least two examples");
  if (jitter < 0.0) throw DomainError("generate_xi: jitter must be >= 0");
  constexpr int kPoints = 16;

  Dataset out;
  out.manifest.generator = "xi";
  out.manifest.n_examples = n;
  out.manifest.k_points = kPoints;
  out.manifest.d_tabular = 0;
  out.manifest.seed = seed;
  out.manifest.params = json{{"jitter", jitter}};

  Rng rng = Rng::substream(seed, 0);
  out.examples.reserve(n);
  for (int e = 0; e < n; ++e) {
    const int label = (e % 2 == 0) ? 1 : 0;  // 1 = X, 0 = I
    LabeledExample ex;
    ex.label = label;
    ex.input.cloud.points.reserve(kPoints);
    if (label == 1) {
      // stroke-major order: 8 points down each diagonal
      for (int stroke = 0; stroke < 2; ++stroke) {
        for (int i = 0; i < 8; ++i) {
          const double t = -1.0 + 2.0 * i / 7.0;
          double x = t;
          double y = stroke == 0 ? t : -t;
          x += jitter * rng.normal();
          y += jitter * rng.normal();
          ex.input.cloud.points.push_back(Point3{x, y, 0.0});
        }
      }
    } else {
      for (int i = 0; i < kPoints; ++i) {
        const double t = -1.0 + 2.0 * i / 15.0;
        double x = jitter * rng.normal();
        double y = t + jitter * rng.normal();
        ex.input.cloud.points.push_back(Point3{x, y, 0.0});
      }
    }
    out.manifest.class_counts[label] += 1;
    out.examples.push_back(std::move(ex));
  }
  return out;
}

Dataset generate_hetero(int n, int k, int d, std::uint64_t seed,
                        int informative) {
  if (n < 2) throw DomainError("generate_hetero: need at least two examples");
  if (k < 4) throw DomainError("generate_hetero: need at least 4 points");
  if (d < 1) throw DomainError("generate_hetero: need at least one column");
  if (informative < 0) informative = d / 2;
  if (informative > d)
    throw DomainError("generate_hetero: informative count exceeds D");

  constexpr double kRadius = 0.8;
  constexpr double kSurfaceNoise = 0.02;
  constexpr double kClassShift = 0.75;
  const Point3 ellipsoid_axes{1.0, 0.7, 0.45};

  Dataset out;
  out.manifest.generator = "hetero";
  out.manifest.n_examples = n;
  out.manifest.k_points = k;
  out.manifest.d_tabular = d;
  out.manifest.seed = seed;
  out.manifest.params =
      json{{"informative", informative}, {"radius", kRadius}};
  std::vector<bool> flags(d, false);
  for (int i = 0; i < informative; ++i) flags[i] = true;
  out.manifest.informative = flags;

  Rng rng = Rng::substream(seed, 0);
  out.examples.reserve(n);
  for (int e = 0; e < n; ++e) {
    const int label = (e % 2 == 0) ? 1 : 0;  // 1 = ellipsoid, 0 = sphere
    LabeledExample ex;
    ex.label = label;
    ex.input.cloud.points.reserve(k);
    for (int j = 0; j < k; ++j) {
      Point3 dir;
      double len = 0.0;
      do {
        dir = Point3{rng.normal(), rng.normal(), rng.normal()};
        len = std::sqrt(dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]);
      } while (len < 1e-9);
      Point3 p;
      for (int a = 0; a < 3; ++a) {
        const double axis = label == 1 ? ellipsoid_axes[a] : 1.0;
        p[a] = kRadius * axis * dir[a] / len + kSurfaceNoise * rng.normal();
      }
      ex.input.cloud.points.push_back(p);
    }
    ex.input.tabular.values.reserve(d);
    for (int i = 0; i < d; ++i) {
      double v = rng.normal();
      if (flags[i]) v += label == 1 ? kClassShift : -kClassShift;
      ex.input.tabular.values.push_back(v);
    }
    out.manifest.class_counts[label] += 1;
    out.examples.push_back(std::move(ex));
  }
  return out;
}

namespace {

json manifest_to_json(const DatasetManifest& m) {
  json j{{"kind", "svehnn-dataset"},
         {"format_version", 1},
         {"tool_version", kVersion},
         {"generator", m.generator},
         {"n_examples", m.n_examples},
         {"K", m.k_points},
         {"D", m.d_tabular},
         {"seed", m.seed},
         {"class_counts", m.class_counts},
         {"params", m.params}};
  if (m.informative) j["informative"] = *m.informative;
  return j;
}

DatasetManifest manifest_from_json(const json& j) {
  DatasetManifest m;
  m.generator = j.at("generator").get<std::string>();
  m.n_examples = j.at("n_examples").get<std::int64_t>();
  m.k_points = j.at("K").get<int>();
  m.d_tabular = j.at("D").get<int>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.class_counts = j.at("class_counts").get<std::array<std::int64_t, 2>>();
  m.params = j.value("params", json::object());
  if (j.contains("informative") && !j.at("informative").is_null())
    m.informative = j.at("informative").get<std::vector<bool>>();
  return m;
}

}  // namespace

void write_dataset(const Dataset& dataset, const std::string& path) {
  if (dataset.examples.empty())
    throw DomainError("write_dataset: refusing to write an empty dataset");
  if (dataset.manifest.n_examples !=
      static_cast<std::int64_t>(dataset.examples.size()))
    throw IntegrityError("write_dataset: manifest count mismatch");
  std::ofstream out(path);
  if (!out) throw IntegrityError("cannot open for writing: " + path);
  out << manifest_to_json(dataset.manifest).dump() << '\n';
  for (const auto& ex : dataset.examples) {
    json points = json::array();
    for (const auto& p : ex.input.cloud.points)
      points.push_back(json::array({p[0], p[1], p[2]}));
    json rec{{"points", std::move(points)},
             {"tabular", ex.input.tabular.values},
             {"label", ex.label}};
    out << rec.dump() << '\n';
  }
  if (!out) throw IntegrityError("write failed: " + path);
}

Dataset read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open dataset file: " + path);
  std::string line;
  std::size_t line_no = 0;
  Dataset out;
  bool have_manifest = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    try {
      if (!have_manifest) {
        if (j.value("kind", "") != "svehnn-dataset")
          throw ParseError(path + ":1: missing dataset manifest");
        out.manifest = manifest_from_json(j);
        have_manifest = true;
        continue;
      }
      LabeledExample ex;
      for (const auto& p : j.at("points")) {
        if (!p.is_array() || p.size() != 3)
          throw ParseError(path + ":" + std::to_string(line_no) +
                           ": points must be coordinate triples");
        ex.input.cloud.points.push_back(
            Point3{p[0].get<double>(), p[1].get<double>(), p[2].get<double>()});
      }
      ex.input.tabular.values = j.at("tabular").get<Vec>();
      ex.label = j.at("label").get<int>();
      if (ex.label != 0 && ex.label != 1)
        throw IntegrityError(path + ":" + std::to_string(line_no) +
                             ": label must be 0 or 1");
      if (ex.input.cloud.size() != out.manifest.k_points ||
          ex.input.tabular.size() != out.manifest.d_tabular)
        throw IntegrityError(path + ":" + std::to_string(line_no) +
                             ": record shape disagrees with manifest");
      out.examples.push_back(std::move(ex));
    } catch (const json::exception& e) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!have_manifest) throw ParseError(path + ": empty file");
  if (static_cast<std::int64_t>(out.examples.size()) !=
      out.manifest.n_examples)
    throw IntegrityError(path + ": expected " +
                         std::to_string(out.manifest.n_examples) +
                         " records, found " +
                         std::to_string(out.examples.size()));
  return out;
}

}  // namespace svehnn
