#pragma once

#include <optional>
#include <string>

#include "svehnn/nn.hpp"

namespace svehnn {

enum class BaselineKind { zero, hull };

// Reference input z^bl defining feature absence. Point features are replaced
// by the origin (zero) or by an index-matched template point (hull); tabular
// features are always replaced by zero.
struct BaselineSpec {
  BaselineKind kind = BaselineKind::zero;
  std::optional<PointCloud> template_cloud;  // required for hull

  static BaselineSpec zero_baseline() { return BaselineSpec{}; }
  static BaselineSpec hull_baseline(PointCloud template_cloud) {
    return BaselineSpec{BaselineKind::hull, std::move(template_cloud)};
  }
};

inline const char* baseline_name(BaselineKind kind) {
  return kind == BaselineKind::zero ? "zero" : "hull";
}

inline Point3 baseline_point(const BaselineSpec& baseline, int point_index,
                             int k_points) {
  if (baseline.kind == BaselineKind::zero) return Point3{0.0, 0.0, 0.0};
  if (!baseline.template_cloud)
    throw DomainError("hull baseline requested without a template");
  if (baseline.template_cloud->size() != k_points)
    throw ShapeError("hull template point count mismatch");
  return baseline.template_cloud->points[point_index];
}

// The all-features-absent input.
inline HeterogeneousInput baseline_input(const HeterogeneousInput& z,
                                         const BaselineSpec& baseline) {
  HeterogeneousInput out;
  out.cloud.points.reserve(z.cloud.points.size());
  for (int j = 0; j < z.cloud.size(); ++j)
    out.cloud.points.push_back(baseline_point(baseline, j, z.cloud.size()));
  out.tabular.values.assign(z.tabular.values.size(), 0.0);
  return out;
}

}  // namespace svehnn
