#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "facetrace/knn.hpp"
#include "facetrace/types.hpp"

namespace facetrace::segmentation {

struct Params {
  std::size_t k = 30;                 // neighbors per point; the covariance uses the first k/2
  double mad_scale = 1.4826;          // MAD -> robust standard deviation
  double consistency_threshold = 2.5; // robust z-score cut for the consistent set
  double center_sigma = 1.0;          // flatness threshold = mean + center_sigma * stddev
  std::size_t min_slice_size = 200;
  unsigned workers = 1;
};

/// Local planar fit of a point set: centroid, unit normal and the three
/// covariance eigenvalues (ascending).
struct PlaneEstimate {
  Vec3 centroid = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  Vec3 eigenvalues = Vec3::Zero();
  bool degenerate = false;  // coincident or collinear support
};

/// Population covariance about the centroid, eigen-decomposed.
/// The smallest eigenvalue is clamped to zero when it is at roundoff level.
PlaneEstimate fit_local_plane(std::span<const Vec3> points);

/// Robust inlier mask over orthogonal distances: keeps entries whose
/// |d - median| / (mad_scale * MAD) is below `threshold`.
/// With MAD == 0 only entries equal to the median are kept.
std::vector<bool> consistent_mask(std::span<const double> distances, double mad_scale,
                                  double threshold, double zero_floor = 0.0);

struct PointAttributes {
  Vec3 normal = Vec3::UnitZ();
  double flatness = 0.0;        // smallest covariance eigenvalue, m^2
  IndexList consistent_set;     // sorted point ids, subset of the neighbor list
  bool noise = false;
};

PointAttributes estimate_attributes(const Cloud& cloud, PointIndex index,
                                    std::span<const PointIndex> neighbors, const Params& params);

std::vector<PointAttributes> estimate_all_attributes(const Cloud& cloud, const NeighborTable& knn,
                                                     const Params& params);

inline constexpr std::int64_t kNoCluster = -1;

struct LinkageRecord {
  PointIndex index = 0;
  std::optional<PointIndex> cnp;
  std::int64_t cluster = kNoCluster;
  double flatness = 0.0;
  bool center = false;
  bool noise = false;
};

struct LinkageTable {
  std::vector<LinkageRecord> records;
  double flatness_mean = 0.0;
  double flatness_stddev = 0.0;
  double center_threshold = 0.0;
  std::size_t cluster_count = 0;
};

/// Links every point to its closest neighboring point (CNP): the flatter neighbor in its
/// consistent set with the smallest normal deviation. Flatness ties are broken by the
/// lower index, normal-deviation ties likewise. Clusters grow from candidate centers.
LinkageTable build_linkage(std::span<const PointAttributes> attrs, const Params& params);

struct Slice {
  IndexList members;         // sorted
  Vec3 centroid = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  double flatness = 0.0;
  IndexList consistent_set;  // sorted, subset of members
};

/// Re-estimates normal, flatness and consistent set over all members.
Slice make_slice(const Cloud& cloud, IndexList members, const Params& params);

std::vector<Slice> create_slices(const Cloud& cloud, const LinkageTable& table,
                                 const Params& params);

struct Result {
  NeighborTable knn;
  std::vector<PointAttributes> attributes;
  LinkageTable linkage;
  std::vector<Slice> slices;
};

/// knn_index -> estimate_all_attributes -> build_linkage -> create_slices.
Result segment(const Cloud& cloud, const Params& params);

}  // namespace facetrace::segmentation
