#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "facetrace/frames.hpp"
#include "facetrace/segmentation.hpp"
#include "facetrace/types.hpp"

namespace facetrace {

/// Plane b*x + e1*y + e2*z + tau = 0 with (b, e1, e2) = unit normal.
struct Plane {
  Vec3 normal = Vec3::UnitZ();
  Vec3 anchor = Vec3::Zero();
  double tau = 0.0;

  static Plane through(const Vec3& anchor, const Vec3& normal);

  Eigen::Vector4d coefficients() const { return {normal.x(), normal.y(), normal.z(), tau}; }
  double signed_distance(const Vec3& p) const { return normal.dot(p) + tau; }
};

/// Bounded convex polygon on a plane. Boundary is counterclockwise seen from +normal.
struct Facet {
  std::uint32_t id = 0;
  Plane plane;
  std::vector<Vec3> boundary;
  double z_min = 0.0;
  double z_max = 0.0;
  std::int64_t source_slice = -1;

  // Bounding sphere of the boundary, used for quick rejection.
  Vec3 center = Vec3::Zero();
  double radius = 0.0;

  /// Recomputes height range and bounding sphere from the boundary.
  void refresh_bounds();
};

/// Builds a facet from a planar polygon given in either winding; the plane is fitted
/// through the vertices and the boundary reordered counterclockwise about the normal.
Facet make_facet(std::uint32_t id, std::vector<Vec3> polygon, std::int64_t source_slice = -1);

/// Throws std::invalid_argument naming the violated facet invariant.
void validate_facet(const Facet& facet, double plane_tolerance = 1e-6);

struct PlanarMap {
  std::vector<Facet> facets;
  frames::FrameOrigin origin;
  std::map<std::string, std::string> provenance;
};

void validate_map(const PlanarMap& map);

struct SpacingStats {
  double mean_all = 0.0;
  double median_all = 0.0;
  double mean_of_cluster_means = 0.0;
  double median_of_cluster_means = 0.0;
  std::size_t point_count = 0;
  std::size_t cluster_count = 0;
};

namespace planar {

/// Merges slices whose consistent sets touch through a mutually consistent point pair
/// and whose normals differ by less than `max_angle_rad`. Repeats until no pair merges.
/// Output is canonical: ordered by smallest member index, independent of input order.
std::vector<segmentation::Slice> merge_slices(const Cloud& cloud,
                                              std::span<const segmentation::PointAttributes> attrs,
                                              std::vector<segmentation::Slice> slices,
                                              double max_angle_rad,
                                              const segmentation::Params& params);

/// Total-least-squares plane through all slice members. Throws on collinear support.
Plane fit_plane(const Cloud& cloud, const segmentation::Slice& slice);

/// Orthonormal in-plane frame; (u, v, normal) is right-handed.
struct PlaneProjection {
  Vec3 origin = Vec3::Zero();
  Vec3 u_axis = Vec3::UnitX();
  Vec3 v_axis = Vec3::UnitY();
  std::vector<Vec2> points;

  Vec3 lift(const Vec2& uv) const { return origin + uv.x() * u_axis + uv.y() * v_axis; }
};

/// In-plane basis for a normal: u is the up direction projected onto the plane, or +x
/// when the plane is horizontal.
void plane_basis(const Vec3& normal, Vec3& u_axis, Vec3& v_axis);

PlaneProjection project_to_plane_2d(const Cloud& cloud, const segmentation::Slice& slice,
                                    const Plane& plane);

/// Cross product of EF and EG, positive when G is left of E->F.
inline double turn(const Vec2& e, const Vec2& f, const Vec2& g) {
  return (f.x() - e.x()) * (g.y() - e.y()) - (f.y() - e.y()) * (g.x() - e.x());
}

/// Convex hull, counterclockwise, starting at the lowest (then leftmost) point.
/// Collinear boundary points are dropped. Throws when fewer than three
/// non-collinear points exist.
std::vector<Vec2> graham_scan(std::span<const Vec2> points);

/// fit_plane -> project -> graham_scan -> lift for every slice. Slices that fail
/// the plane fit are skipped with a warning.
PlanarMap build_facets(const Cloud& cloud, std::span<const segmentation::Slice> slices,
                       const frames::FrameOrigin& origin = {}, unsigned workers = 1);

/// Keeps whole facets whose [z_min, z_max] overlaps [z_lo, z_hi].
PlanarMap filter_by_height(const PlanarMap& map, double z_lo, double z_hi);

/// Nearest-neighbor spacing inside each cluster. Clusters with fewer than two points are skipped.
SpacingStats spacing_stats(const Cloud& cloud, std::span<const IndexList> clusters);

struct BuildParams {
  segmentation::Params segmentation;
  double merge_angle_rad = 10.0 * kDegToRad;
  // Apply min_slice_size to merged slices rather than to raw clusters. Noisy facades
  // break into many small flatness basins that only reach the minimum once merged.
  bool filter_after_merge = true;
};

struct BuildResult {
  segmentation::Result segmentation;
  std::vector<segmentation::Slice> slices;  // after merging
  PlanarMap map;
};

/// Full cloud -> planar map pipeline.
BuildResult map_from_cloud(const Cloud& cloud, const BuildParams& params,
                           const frames::FrameOrigin& origin = {});

}  // namespace planar
}  // namespace facetrace
