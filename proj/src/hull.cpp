#include "svehnn/hull.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <utility>

namespace svehnn {

namespace {

Point3 sub(const Point3& a, const Point3& b) {
  return Point3{a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

Point3 cross(const Point3& a, const Point3& b) {
  return Point3{a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
                a[0] * b[1] - a[1] * b[0]};
}

double dot(const Point3& a, const Point3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

double norm(const Point3& a) { return std::sqrt(dot(a, a)); }

struct Face {
  int a, b, c;
  Point3 normal;
  double offset;
  bool alive = true;
  std::vector<int> outside;
};

Face make_face(int a, int b, int c, const std::vector<Point3>& pts) {
  Face f{a, b, c, {}, 0.0, true, {}};
  f.normal = cross(sub(pts[b], pts[a]), sub(pts[c], pts[a]));
  f.offset = dot(f.normal, pts[a]);
  return f;
}

double signed_dist(const Face& f, const Point3& p) {
  return dot(f.normal, p) - f.offset;
}

}  // namespace

bool convex_hull(const std::vector<Point3>& points,
                 std::vector<HullFacet>* facets,
                 std::vector<int>* hull_vertices) {
  const int n = static_cast<int>(points.size());
  if (n < 4) return false;

  double scale = 0.0;
  for (const auto& p : points)
    for (double v : p) scale = std::max(scale, std::abs(v));
  const double eps = std::max(scale, 1.0) * 1e-10;

  // initial simplex: farthest pair on an axis, then line, then plane
  int i0 = 0, i1 = 0;
  double best = -1.0;
  for (int axis = 0; axis < 3; ++axis) {
    int lo = 0, hi = 0;
    for (int i = 1; i < n; ++i) {
      if (points[i][axis] < points[lo][axis]) lo = i;
      if (points[i][axis] > points[hi][axis]) hi = i;
    }
    const double d = points[hi][axis] - points[lo][axis];
    if (d > best) {
      best = d;
      i0 = lo;
      i1 = hi;
    }
  }
  if (norm(sub(points[i1], points[i0])) < eps) return false;

  int i2 = -1;
  best = eps;
  const Point3 dir = sub(points[i1], points[i0]);
  for (int i = 0; i < n; ++i) {
    const double d = norm(cross(dir, sub(points[i], points[i0])));
    if (d > best) {
      best = d;
      i2 = i;
    }
  }
  if (i2 < 0) return false;

  int i3 = -1;
  best = eps * norm(cross(dir, sub(points[i2], points[i0])));
  best = std::max(best, eps);
  const Point3 plane_n = cross(dir, sub(points[i2], points[i0]));
  for (int i = 0; i < n; ++i) {
    const double d = std::abs(dot(plane_n, sub(points[i], points[i0])));
    if (d > best) {
      best = d;
      i3 = i;
    }
  }
  if (i3 < 0) return false;

  if (dot(plane_n, sub(points[i3], points[i0])) > 0.0) std::swap(i1, i2);

  std::vector<Face> faces;
  faces.push_back(make_face(i0, i1, i2, points));
  faces.push_back(make_face(i0, i2, i3, points));
  faces.push_back(make_face(i0, i3, i1, points));
  faces.push_back(make_face(i1, i3, i2, points));

  for (int i = 0; i < n; ++i) {
    if (i == i0 || i == i1 || i == i2 || i == i3) continue;
    for (auto& f : faces) {
      if (signed_dist(f, points[i]) > eps) {
        f.outside.push_back(i);
        break;
      }
    }
  }

  for (;;) {
    int pending = -1;
    for (std::size_t fi = 0; fi < faces.size(); ++fi) {
      if (faces[fi].alive && !faces[fi].outside.empty()) {
        pending = static_cast<int>(fi);
        break;
      }
    }
    if (pending < 0) break;

    const Face& host = faces[pending];
    int apex = host.outside[0];
    double farthest = signed_dist(host, points[apex]);
    for (int i : host.outside) {
      const double d = signed_dist(host, points[i]);
      if (d > farthest) {
        farthest = d;
        apex = i;
      }
    }

    std::vector<int> visible;
    for (std::size_t fi = 0; fi < faces.size(); ++fi) {
      if (faces[fi].alive && signed_dist(faces[fi], points[apex]) > eps)
        visible.push_back(static_cast<int>(fi));
    }

    // horizon: directed edges of visible faces whose reverse is not visible
    std::set<std::pair<int, int>> visible_edges;
    for (int fi : visible) {
      const Face& f = faces[fi];
      visible_edges.insert({f.a, f.b});
      visible_edges.insert({f.b, f.c});
      visible_edges.insert({f.c, f.a});
    }
    std::vector<std::pair<int, int>> horizon;
    for (const auto& e : visible_edges) {
      if (!visible_edges.count({e.second, e.first})) horizon.push_back(e);
    }

    std::vector<int> orphaned;
    for (int fi : visible) {
      faces[fi].alive = false;
      orphaned.insert(orphaned.end(), faces[fi].outside.begin(),
                      faces[fi].outside.end());
      faces[fi].outside.clear();
    }

    std::vector<int> fresh;
    for (const auto& e : horizon) {
      faces.push_back(make_face(e.first, e.second, apex, points));
      fresh.push_back(static_cast<int>(faces.size()) - 1);
    }
    std::sort(orphaned.begin(), orphaned.end());
    orphaned.erase(std::unique(orphaned.begin(), orphaned.end()),
                   orphaned.end());
    for (int i : orphaned) {
      if (i == apex) continue;
      for (int fi : fresh) {
        if (signed_dist(faces[fi], points[i]) > eps) {
          faces[fi].outside.push_back(i);
          break;
        }
      }
    }
  }

  facets->clear();
  std::set<int> vertex_set;
  for (const auto& f : faces) {
    if (!f.alive) continue;
    const double len = norm(f.normal);
    if (len < eps * eps) continue;
    HullFacet out;
    out.a = f.a;
    out.b = f.b;
    out.c = f.c;
    out.normal = Point3{f.normal[0] / len, f.normal[1] / len, f.normal[2] / len};
    out.offset = f.offset / len;
    facets->push_back(out);
    vertex_set.insert(f.a);
    vertex_set.insert(f.b);
    vertex_set.insert(f.c);
  }
  if (hull_vertices)
    hull_vertices->assign(vertex_set.begin(), vertex_set.end());
  return !facets->empty();
}

double ray_exit(const std::vector<HullFacet>& facets, const Point3& origin,
                const Point3& dir) {
  double t = std::numeric_limits<double>::infinity();
  for (const auto& f : facets) {
    const double denom = dot(f.normal, dir);
    if (denom <= 1e-15) continue;
    const double crossing = (f.offset - dot(f.normal, origin)) / denom;
    if (crossing >= 0.0) t = std::min(t, crossing);
  }
  return std::isfinite(t) ? t : 0.0;
}

HullTemplateResult hull_template(const std::vector<PointCloud>& dataset) {
  if (dataset.empty()) throw DomainError("hull_template: empty dataset");
  const int k = dataset[0].size();
  if (k < 1) throw DomainError("hull_template: empty clouds");
  for (const auto& cloud : dataset) {
    if (cloud.size() != k)
      throw ShapeError("hull_template: clouds must share one point count");
  }

  std::vector<Point3> pooled;
  pooled.reserve(dataset.size() * static_cast<std::size_t>(k));
  for (const auto& cloud : dataset)
    pooled.insert(pooled.end(), cloud.points.begin(), cloud.points.end());

  Point3 centroid{0.0, 0.0, 0.0};
  for (const auto& p : pooled)
    for (int a = 0; a < 3; ++a) centroid[a] += p[a];
  for (int a = 0; a < 3; ++a)
    centroid[a] /= static_cast<double>(pooled.size());

  std::vector<Point3> index_mean(k, Point3{0.0, 0.0, 0.0});
  for (const auto& cloud : dataset) {
    for (int j = 0; j < k; ++j)
      for (int a = 0; a < 3; ++a) index_mean[j][a] += cloud.points[j][a];
  }
  for (int j = 0; j < k; ++j)
    for (int a = 0; a < 3; ++a)
      index_mean[j][a] /= static_cast<double>(dataset.size());

  double scale = 1.0;
  for (const auto& p : pooled)
    for (double v : p) scale = std::max(scale, std::abs(v));
  const double tiny = scale * 1e-12;

  std::vector<HullFacet> facets;
  std::vector<int> vertices;
  HullTemplateResult result;
  result.cloud.points.resize(k);

  if (convex_hull(pooled, &facets, &vertices)) {
    for (int j = 0; j < k; ++j) {
      Point3 dir = sub(index_mean[j], centroid);
      const double len = norm(dir);
      if (len < tiny) {
        // mean coincides with the centroid: nearest hull vertex, lowest
        // pooled index on ties
        int best = vertices[0];
        double best_d = norm(sub(pooled[best], centroid));
        for (int v : vertices) {
          const double d = norm(sub(pooled[v], centroid));
          if (d < best_d - tiny || (std::abs(d - best_d) <= tiny && v < best)) {
            best = v;
            best_d = d;
          }
        }
        result.cloud.points[j] = pooled[best];
        continue;
      }
      for (int a = 0; a < 3; ++a) dir[a] /= len;
      const double t = ray_exit(facets, centroid, dir);
      result.cloud.points[j] = Point3{centroid[0] + t * dir[0],
                                      centroid[1] + t * dir[1],
                                      centroid[2] + t * dir[2]};
    }
    return result;
  }

  // Degenerate pooled geometry: project onto the bounding-box surface.
  result.degenerate = true;
  Point3 lo = pooled[0], hi = pooled[0];
  for (const auto& p : pooled) {
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], p[a]);
      hi[a] = std::max(hi[a], p[a]);
    }
  }
  for (int j = 0; j < k; ++j) {
    Point3 dir = sub(index_mean[j], centroid);
    const double len = norm(dir);
    if (len < tiny) {
      int best = 0;
      double best_d = norm(sub(pooled[0], centroid));
      for (std::size_t i = 1; i < pooled.size(); ++i) {
        const double d = norm(sub(pooled[i], centroid));
        if (d < best_d - tiny) {
          best = static_cast<int>(i);
          best_d = d;
        }
      }
      result.cloud.points[j] = pooled[best];
      continue;
    }
    for (int a = 0; a < 3; ++a) dir[a] /= len;
    double t = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
      if (dir[a] > tiny) t = std::min(t, (hi[a] - centroid[a]) / dir[a]);
      if (dir[a] < -tiny) t = std::min(t, (lo[a] - centroid[a]) / dir[a]);
    }
    if (!std::isfinite(t)) t = 0.0;
    result.cloud.points[j] = Point3{centroid[0] + t * dir[0],
                                    centroid[1] + t * dir[1],
                                    centroid[2] + t * dir[2]};
  }
  return result;
}

}  // namespace svehnn
