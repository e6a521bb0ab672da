#include "svehnn/report.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>

#include "svehnn/version.hpp"

namespace svehnn {

using nlohmann::json;

namespace {

std::string utc_now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return std::string(buf);
}

}  // namespace

json make_meta(std::uint64_t seed, const std::string& model_checksum,
               const json& config_echo) {
  return json{{"tool_version", kVersion},
              {"seed", seed},
              {"model_checksum", model_checksum},
              {"config", config_echo}};
}

json timing_block(const json& wall_clock) {
  return json{{"generated_at", utc_now_iso8601()}, {"wall_clock", wall_clock}};
}

std::string canonical_checksum(json document) {
  document.erase("timing");
  return checksum_string(fnv1a64(document.dump()));
}

json attribution_report(const Attribution& attribution,
                        const HeterogeneousInput& z, int k_points,
                        int d_tabular) {
  const FeatureSpace space{k_points, d_tabular};
  json features = json::array();
  for (int i = 0; i < space.total(); ++i) {
    json rec{{"feature_id", i},
             {"value", attribution.values[static_cast<std::size_t>(i)]}};
    if (space.is_point(i)) {
      rec["kind"] = "point";
      const Point3& p = z.cloud.points[static_cast<std::size_t>(i)];
      rec["point_coords"] = json::array({p[0], p[1], p[2]});
    } else {
      rec["kind"] = "tabular";
      rec["column_name"] = "x" + std::to_string(space.tabular_column(i));
    }
    features.push_back(std::move(rec));
  }
  return json{{"estimator", attribution.estimator},
              {"baseline", baseline_name(attribution.baseline)},
              {"evaluations", attribution.evaluations},
              {"f_z", attribution.f_z},
              {"f_baseline", attribution.f_baseline},
              {"predicted_probability", sigmoid(attribution.f_z)},
              {"features", std::move(features)},
              {"diagnostics", attribution.diagnostics}};
}

void write_json_file(const json& document, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IntegrityError("cannot open for writing: " + path);
  out << document.dump(2) << '\n';
  if (!out) throw IntegrityError("write failed: " + path);
}

void write_text_file(const std::string& text, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IntegrityError("cannot open for writing: " + path);
  out << text;
  if (!out) throw IntegrityError("write failed: " + path);
}

}  // namespace svehnn
