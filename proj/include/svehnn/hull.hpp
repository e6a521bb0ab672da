#pragma once

#include <vector>

#include "svehnn/nn.hpp"

namespace svehnn {

// Triangular facet of a convex hull, normal pointing outward, so the hull
// interior satisfies normal . x <= offset for every facet.
struct HullFacet {
  int a = 0, b = 0, c = 0;
  Point3 normal{0.0, 0.0, 0.0};
  double offset = 0.0;
};

// Quickhull over 3-D points. Returns false when the input is degenerate
// (fewer than four affinely independent points).
bool convex_hull(const std::vector<Point3>& points,
                 std::vector<HullFacet>* facets,
                 std::vector<int>* hull_vertices);

// Parameter t where the ray origin + t * dir leaves the hull; origin must be
// interior.
double ray_exit(const std::vector<HullFacet>& facets, const Point3& origin,
                const Point3& dir);

struct HullTemplateResult {
  PointCloud cloud;
  bool degenerate = false;  // fell back to bounding-box projection
};

// Baseline template: for each point index, the intersection of the ray from
// the pooled centroid through the per-index mean point with the hull of all
// pooled points. Degenerate hulls fall back to the bounding-box surface.
HullTemplateResult hull_template(const std::vector<PointCloud>& dataset);

}  // namespace svehnn
