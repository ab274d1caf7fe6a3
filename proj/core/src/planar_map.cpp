#include "facetrace/planar_map.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>

#include "facetrace/knn.hpp"
#include "facetrace/log.hpp"
#include "facetrace/parallel.hpp"

namespace facetrace {

Plane Plane::through(const Vec3& anchor, const Vec3& normal) {
  Plane p;
  p.normal = normal.normalized();
  p.anchor = anchor;
  p.tau = -p.normal.dot(anchor);
  return p;
}

void Facet::refresh_bounds() {
  if (boundary.empty()) return;
  z_min = z_max = boundary.front().z();
  center = Vec3::Zero();
  for (const auto& v : boundary) {
    z_min = std::min(z_min, v.z());
    z_max = std::max(z_max, v.z());
    center += v;
  }
  center /= static_cast<double>(boundary.size());
  radius = 0.0;
  for (const auto& v : boundary) radius = std::max(radius, (v - center).norm());
}

Facet make_facet(std::uint32_t id, std::vector<Vec3> polygon, std::int64_t source_slice) {
  if (polygon.size() < 3) throw std::invalid_argument("facet polygon needs at least 3 vertices");
  // Newell normal follows the polygon winding.
  Vec3 normal = Vec3::Zero();
  Vec3 centroid = Vec3::Zero();
  for (std::size_t i = 0; i < polygon.size(); ++i) {
    const Vec3& a = polygon[i];
    const Vec3& b = polygon[(i + 1) % polygon.size()];
    normal.x() += (a.y() - b.y()) * (a.z() + b.z());
    normal.y() += (a.z() - b.z()) * (a.x() + b.x());
    normal.z() += (a.x() - b.x()) * (a.y() + b.y());
    centroid += a;
  }
  centroid /= static_cast<double>(polygon.size());
  if (normal.norm() == 0.0) throw std::invalid_argument("facet polygon is degenerate");

  Facet f;
  f.id = id;
  f.source_slice = source_slice;
  f.plane = Plane::through(centroid, normal);
  for (auto& v : polygon) v -= f.plane.signed_distance(v) * f.plane.normal;
  f.boundary = std::move(polygon);
  f.refresh_bounds();
  return f;
}

void validate_facet(const Facet& facet, double plane_tolerance) {
  const std::string tag = "facet " + std::to_string(facet.id) + ": ";
  if (facet.boundary.size() < 3) throw std::invalid_argument(tag + "fewer than 3 boundary vertices");
  if (!facet.plane.normal.allFinite() || std::abs(facet.plane.normal.norm() - 1.0) > 1e-9) {
    throw std::invalid_argument(tag + "normal is not unit length");
  }
  if (std::abs(facet.plane.signed_distance(facet.plane.anchor)) > 1e-9 *
                                                                       std::max(1.0, facet.plane.anchor.norm())) {
    throw std::invalid_argument(tag + "anchor is not on the plane");
  }
  for (const auto& v : facet.boundary) {
    if (!v.allFinite()) throw std::invalid_argument(tag + "non-finite boundary vertex");
    if (std::abs(facet.plane.signed_distance(v)) > plane_tolerance) {
      throw std::invalid_argument(tag + "boundary vertex off the plane");
    }
  }
  const std::size_t n = facet.boundary.size();
  double scale = 0.0;
  for (const auto& v : facet.boundary) scale = std::max(scale, (v - facet.boundary[0]).norm());
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& a = facet.boundary[i];
    const Vec3& b = facet.boundary[(i + 1) % n];
    const Vec3& c = facet.boundary[(i + 2) % n];
    if (facet.plane.normal.dot((b - a).cross(c - b)) < -1e-9 * scale * scale) {
      throw std::invalid_argument(tag + "boundary is not convex counterclockwise");
    }
  }
  if (!(facet.z_min <= facet.z_max)) throw std::invalid_argument(tag + "height range inverted");
}

void validate_map(const PlanarMap& map) {
  std::vector<std::uint32_t> ids;
  ids.reserve(map.facets.size());
  for (const auto& f : map.facets) {
    validate_facet(f);
    ids.push_back(f.id);
  }
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    throw std::invalid_argument("planar map has duplicate facet ids");
  }
}

namespace planar {
namespace {

struct DisjointSets {
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (b < a) std::swap(a, b);
    parent[b] = a;  // smallest id is the root
    return true;
  }
  std::vector<std::size_t> parent;
};

bool contains(const IndexList& sorted, PointIndex value) {
  return std::binary_search(sorted.begin(), sorted.end(), value);
}

void sort_canonical(std::vector<segmentation::Slice>& slices) {
  std::sort(slices.begin(), slices.end(), [](const auto& a, const auto& b) {
    if (a.members.empty() || b.members.empty()) return a.members.size() > b.members.size();
    return a.members.front() < b.members.front();
  });
}

// Projection roundoff leaves points on a straight hull edge a few ulps off the line.
// Turns whose sine is below this are treated as straight.
constexpr double kCollinearSine = 1e-10;

bool nearly_collinear(double cross, const Vec2& a, const Vec2& b) {
  return std::abs(cross) <= kCollinearSine * a.norm() * b.norm();
}

}  // namespace

std::vector<segmentation::Slice> merge_slices(const Cloud& cloud,
                                              std::span<const segmentation::PointAttributes> attrs,
                                              std::vector<segmentation::Slice> slices,
                                              double max_angle_rad,
                                              const segmentation::Params& params) {
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  const double min_alignment = std::cos(max_angle_rad);
  sort_canonical(slices);

  while (slices.size() > 1) {
    std::vector<std::size_t> owner(cloud.size(), kNone);
    for (std::size_t s = 0; s < slices.size(); ++s) {
      for (PointIndex p : slices[s].consistent_set) owner[p] = s;
    }

    DisjointSets sets(slices.size());
    bool merged = false;
    for (std::size_t p = 0; p < slices.size(); ++p) {
      for (PointIndex i : slices[p].consistent_set) {
        for (PointIndex j : attrs[i].consistent_set) {
          const std::size_t q = owner[j];
          if (q == kNone || q <= p) continue;
          if (!contains(attrs[j].consistent_set, i)) continue;
          // arccos|n_p . n_q| < theta  <=>  |n_p . n_q| > cos(theta)
          const double alignment = std::abs(slices[p].normal.dot(slices[q].normal));
          if (alignment > min_alignment) merged |= sets.unite(p, q);
        }
      }
    }
    if (!merged) break;

    std::vector<IndexList> groups(slices.size());
    for (std::size_t s = 0; s < slices.size(); ++s) {
      auto& g = groups[sets.find(s)];
      g.insert(g.end(), slices[s].members.begin(), slices[s].members.end());
    }
    std::vector<segmentation::Slice> next;
    for (std::size_t s = 0; s < slices.size(); ++s) {
      if (sets.find(s) != s) continue;
      if (groups[s].size() == slices[s].members.size()) {
        next.push_back(std::move(slices[s]));
      } else {
        next.push_back(segmentation::make_slice(cloud, std::move(groups[s]), params));
      }
    }
    slices = std::move(next);
    sort_canonical(slices);
  }
  return slices;
}

Plane fit_plane(const Cloud& cloud, const segmentation::Slice& slice) {
  std::vector<Vec3> pts(slice.members.size());
  for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = cloud[slice.members[i]].position;
  const auto est = segmentation::fit_local_plane(pts);
  if (est.degenerate) throw std::invalid_argument("fit_plane: slice members are collinear or coincident");
  return Plane::through(est.centroid, est.normal);
}

void plane_basis(const Vec3& normal, Vec3& u_axis, Vec3& v_axis) {
  const Vec3 n = normal.normalized();
  Vec3 up = Vec3::UnitZ() - n.z() * n;
  if (up.norm() < 1e-9) up = Vec3::UnitX() - n.x() * n;
  u_axis = up.normalized();
  v_axis = n.cross(u_axis);
}

PlaneProjection project_to_plane_2d(const Cloud& cloud, const segmentation::Slice& slice,
                                    const Plane& plane) {
  PlaneProjection proj;
  proj.origin = plane.anchor;
  plane_basis(plane.normal, proj.u_axis, proj.v_axis);
  proj.points.reserve(slice.members.size());
  for (PointIndex idx : slice.members) {
    const Vec3 d = cloud[idx].position - plane.anchor;
    proj.points.emplace_back(d.dot(proj.u_axis), d.dot(proj.v_axis));
  }
  return proj;
}

std::vector<Vec2> graham_scan(std::span<const Vec2> input) {
  if (input.size() < 3) throw std::invalid_argument("graham_scan: need at least 3 points");
  std::vector<Vec2> pts(input.begin(), input.end());

  auto pivot_it = std::min_element(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.y() < b.y() || (a.y() == b.y() && a.x() < b.x());
  });
  std::iter_swap(pts.begin(), pivot_it);
  const Vec2 pivot = pts.front();

  std::vector<Vec2> rest;
  rest.reserve(pts.size() - 1);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (pts[i] != pivot) rest.push_back(pts[i]);
  }
  // Every point is at polar angle [0, pi) from the pivot, so the cross product
  // alone orders them; equal angles go nearer first.
  std::sort(rest.begin(), rest.end(), [&](const Vec2& a, const Vec2& b) {
    const double c = turn(pivot, a, b);
    if (!nearly_collinear(c, a - pivot, b - pivot)) return c > 0.0;
    return (a - pivot).squaredNorm() < (b - pivot).squaredNorm();
  });
  if (rest.empty()) throw std::invalid_argument("graham_scan: all points coincide");

  std::vector<Vec2> stack;
  stack.reserve(rest.size() + 1);
  stack.push_back(pivot);
  stack.push_back(rest.front());
  for (std::size_t k = 1; k < rest.size(); ++k) {
    const Vec2& g = rest[k];
    // Right turns pop; collinear keeps the point farther along (the incoming one).
    while (stack.size() >= 2) {
      const Vec2& e = stack[stack.size() - 2];
      const double c = turn(e, stack.back(), g);
      if (c > 0.0 && !nearly_collinear(c, stack.back() - e, g - e)) break;
      stack.pop_back();
    }
    stack.push_back(g);
  }
  if (stack.size() < 3) throw std::invalid_argument("graham_scan: points are collinear");
  return stack;
}

PlanarMap build_facets(const Cloud& cloud, std::span<const segmentation::Slice> slices,
                       const frames::FrameOrigin& origin, unsigned workers) {
  std::vector<std::optional<Facet>> built(slices.size());
  parallel_for(slices.size(), workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t s = begin; s < end; ++s) {
      try {
        const Plane plane = fit_plane(cloud, slices[s]);
        const PlaneProjection proj = project_to_plane_2d(cloud, slices[s], plane);
        const auto hull = graham_scan(proj.points);
        Facet f;
        f.plane = plane;
        f.source_slice = static_cast<std::int64_t>(s);
        f.boundary.reserve(hull.size());
        for (const auto& uv : hull) f.boundary.push_back(proj.lift(uv));
        f.refresh_bounds();
        built[s] = std::move(f);
      } catch (const std::invalid_argument& e) {
        log_warning("build_facets: skipping slice " + std::to_string(s) + ": " + e.what());
      }
    }
  });
  PlanarMap map;
  map.origin = origin;
  for (auto& f : built) {
    if (!f) continue;
    f->id = static_cast<std::uint32_t>(map.facets.size());
    map.facets.push_back(std::move(*f));
  }
  return map;
}

PlanarMap filter_by_height(const PlanarMap& map, double z_lo, double z_hi) {
  if (!(z_lo <= z_hi)) throw std::invalid_argument("filter_by_height: band lower bound exceeds upper");
  PlanarMap out;
  out.origin = map.origin;
  out.provenance = map.provenance;
  for (const auto& f : map.facets) {
    if (f.z_max >= z_lo && f.z_min <= z_hi) out.facets.push_back(f);
  }
  return out;
}

SpacingStats spacing_stats(const Cloud& cloud, std::span<const IndexList> clusters) {
  SpacingStats stats;
  std::vector<double> all;
  std::vector<double> cluster_means;
  std::vector<PointIndex> found;
  for (const auto& members : clusters) {
    if (members.size() < 2) continue;
    std::vector<Vec3> pts(members.size());
    for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = cloud[members[i]].position;
    const KdTree tree(pts);
    double sum = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      tree.nearest(pts[i], 1, found, i);
      const double d = (pts[found.front()] - pts[i]).norm();
      all.push_back(d);
      sum += d;
    }
    cluster_means.push_back(sum / static_cast<double>(pts.size()));
  }
  auto mean = [](const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  auto median = [](std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
  };
  stats.point_count = all.size();
  stats.cluster_count = cluster_means.size();
  stats.mean_all = mean(all);
  stats.median_all = median(all);
  stats.mean_of_cluster_means = mean(cluster_means);
  stats.median_of_cluster_means = median(cluster_means);
  return stats;
}

BuildResult map_from_cloud(const Cloud& cloud, const BuildParams& params,
                           const frames::FrameOrigin& origin) {
  BuildResult result;
  segmentation::Params seg = params.segmentation;
  if (params.filter_after_merge) seg.min_slice_size = 3;
  result.segmentation = segmentation::segment(cloud, seg);
  result.slices = merge_slices(cloud, result.segmentation.attributes, result.segmentation.slices,
                               params.merge_angle_rad, params.segmentation);
  if (params.filter_after_merge) {
    std::erase_if(result.slices, [&](const segmentation::Slice& s) {
      return s.members.size() < params.segmentation.min_slice_size;
    });
    if (result.slices.empty()) {
      log_warning("map_from_cloud: no merged slice reached the minimum size of " +
                  std::to_string(params.segmentation.min_slice_size) + " points");
    }
  }
  result.map = build_facets(cloud, result.slices, origin, params.segmentation.workers);
  return result;
}

}  // namespace planar
}  // namespace facetrace
