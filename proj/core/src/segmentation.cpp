#include "facetrace/segmentation.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "facetrace/log.hpp"
#include "facetrace/parallel.hpp"

namespace facetrace::segmentation {
namespace {

// Eigenvalues below this fraction of the largest are roundoff, not geometry.
constexpr double kRoundoffEigen = 1e-12;
// Distances below this fraction of the neighborhood spread count as zero.
constexpr double kRoundoffDistance = 1e-9;

double median_of(std::vector<double> values) {
  const std::size_t n = values.size();
  const std::size_t mid = n / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double upper = values[mid];
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lower + upper);
}

}  // namespace

PlaneEstimate fit_local_plane(std::span<const Vec3> points) {
  PlaneEstimate out;
  if (points.size() < 3) {
    out.degenerate = true;
    return out;
  }
  Vec3 centroid = Vec3::Zero();
  for (const auto& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());

  Mat3 cov = Mat3::Zero();
  for (const auto& p : points) {
    const Vec3 d = p - centroid;
    cov.noalias() += d * d.transpose();
  }
  cov /= static_cast<double>(points.size());

  Eigen::SelfAdjointEigenSolver<Mat3> solver(cov);
  Vec3 eig = solver.eigenvalues();
  out.centroid = centroid;
  out.normal = solver.eigenvectors().col(0).normalized();
  for (int i = 0; i < 3; ++i) eig[i] = std::max(eig[i], 0.0);
  if (eig[0] < kRoundoffEigen * eig[2]) eig[0] = 0.0;
  out.eigenvalues = eig;
  out.degenerate = !(eig[2] > 0.0) || eig[1] <= kRoundoffEigen * eig[2];
  return out;
}

std::vector<bool> consistent_mask(std::span<const double> distances, double mad_scale,
                                  double threshold, double zero_floor) {
  std::vector<bool> keep(distances.size(), false);
  if (distances.empty()) return keep;
  const double med = median_of({distances.begin(), distances.end()});
  std::vector<double> dev(distances.size());
  for (std::size_t i = 0; i < distances.size(); ++i) dev[i] = std::abs(distances[i] - med);
  const double mad = mad_scale * median_of(dev);
  for (std::size_t i = 0; i < distances.size(); ++i) {
    if (mad <= zero_floor) {
      keep[i] = dev[i] <= zero_floor;
    } else {
      keep[i] = dev[i] / mad < threshold;
    }
  }
  return keep;
}

PointAttributes estimate_attributes(const Cloud& cloud, PointIndex index,
                                    std::span<const PointIndex> neighbors, const Params& params) {
  (void)index;
  PointAttributes attr;
  const std::size_t half = neighbors.size() / 2;
  if (half < 3) {
    attr.noise = true;
    return attr;
  }
  std::vector<Vec3> support(half);
  for (std::size_t i = 0; i < half; ++i) support[i] = cloud[neighbors[i]].position;
  const PlaneEstimate plane = fit_local_plane(support);
  if (plane.degenerate) {
    attr.noise = true;
    return attr;
  }
  attr.normal = plane.normal;
  attr.flatness = plane.eigenvalues[0];

  std::vector<double> distances(neighbors.size());
  for (std::size_t i = 0; i < neighbors.size(); ++i) {
    distances[i] = std::abs(plane.normal.dot(cloud[neighbors[i]].position - plane.centroid));
  }
  const double floor = kRoundoffDistance * std::sqrt(plane.eigenvalues[2]);
  const auto keep =
      consistent_mask(distances, params.mad_scale, params.consistency_threshold, floor);
  for (std::size_t i = 0; i < neighbors.size(); ++i) {
    if (keep[i]) attr.consistent_set.push_back(neighbors[i]);
  }
  std::sort(attr.consistent_set.begin(), attr.consistent_set.end());
  attr.consistent_set.erase(std::unique(attr.consistent_set.begin(), attr.consistent_set.end()),
                            attr.consistent_set.end());
  if (attr.consistent_set.empty()) attr.noise = true;
  return attr;
}

std::vector<PointAttributes> estimate_all_attributes(const Cloud& cloud, const NeighborTable& knn,
                                                     const Params& params) {
  if (knn.size() != cloud.size()) {
    throw std::invalid_argument("neighbor table does not match cloud size");
  }
  std::vector<PointAttributes> attrs(cloud.size());
  parallel_for(cloud.size(), params.workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      attrs[i] = estimate_attributes(cloud, static_cast<PointIndex>(i), knn.of(i), params);
    }
  });
  return attrs;
}

LinkageTable build_linkage(std::span<const PointAttributes> attrs, const Params& params) {
  const std::size_t n = attrs.size();
  LinkageTable table;
  table.records.resize(n);

  double sum = 0.0;
  std::size_t valid = 0;
  for (std::size_t i = 0; i < n; ++i) {
    auto& rec = table.records[i];
    rec.index = static_cast<PointIndex>(i);
    rec.flatness = attrs[i].flatness;
    rec.noise = attrs[i].noise || attrs[i].consistent_set.empty();
    if (!rec.noise) {
      sum += attrs[i].flatness;
      ++valid;
    }
  }
  if (valid > 0) {
    table.flatness_mean = sum / static_cast<double>(valid);
    double sq = 0.0;
    for (const auto& rec : table.records) {
      if (!rec.noise) sq += (rec.flatness - table.flatness_mean) * (rec.flatness - table.flatness_mean);
    }
    // Sample (n - 1) standard deviation.
    table.flatness_stddev = valid > 1 ? std::sqrt(sq / static_cast<double>(valid - 1)) : 0.0;
  }
  table.center_threshold = table.flatness_mean + params.center_sigma * table.flatness_stddev;

  // Strict total order on flatness; the index breaks ties so links are acyclic.
  auto flatter = [&](std::size_t a, std::size_t b) {
    return attrs[a].flatness < attrs[b].flatness ||
           (attrs[a].flatness == attrs[b].flatness && a < b);
  };

  parallel_for(n, params.workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      auto& rec = table.records[i];
      if (rec.noise) continue;
      double best_alignment = -1.0;
      std::optional<PointIndex> best;
      for (PointIndex j : attrs[i].consistent_set) {
        if (table.records[j].noise || !flatter(j, i)) continue;
        // Folded deviation: normals are sign-ambiguous.
        const double alignment = std::abs(attrs[i].normal.dot(attrs[j].normal));
        if (alignment > best_alignment || (alignment == best_alignment && best && j < *best)) {
          best_alignment = alignment;
          best = j;
        }
      }
      rec.cnp = best;
      rec.center = !best && rec.flatness <= table.center_threshold;
    }
  });

  // Cluster numbers follow ascending center index.
  std::vector<std::int64_t> center_cluster(n, kNoCluster);
  for (std::size_t i = 0; i < n; ++i) {
    if (table.records[i].center) {
      center_cluster[i] = static_cast<std::int64_t>(table.cluster_count++);
    }
  }

  // Resolve roots by following CNP links; memoized, links strictly descend in flatness.
  std::vector<std::int64_t> resolved(n, -2);
  std::vector<PointIndex> path;
  for (std::size_t i = 0; i < n; ++i) {
    if (resolved[i] != -2) continue;
    path.clear();
    std::size_t cur = i;
    std::int64_t cluster = kNoCluster;
    while (true) {
      if (resolved[cur] != -2) {
        cluster = resolved[cur];
        break;
      }
      path.push_back(static_cast<PointIndex>(cur));
      const auto& rec = table.records[cur];
      if (rec.noise) {
        cluster = kNoCluster;
        break;
      }
      if (!rec.cnp) {
        cluster = center_cluster[cur];
        break;
      }
      cur = *rec.cnp;
    }
    for (PointIndex p : path) resolved[p] = table.records[p].noise ? kNoCluster : cluster;
  }
  for (std::size_t i = 0; i < n; ++i) table.records[i].cluster = resolved[i];
  return table;
}

Slice make_slice(const Cloud& cloud, IndexList members, const Params& params) {
  std::sort(members.begin(), members.end());
  Slice slice;
  slice.members = std::move(members);
  std::vector<Vec3> pts(slice.members.size());
  for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = cloud[slice.members[i]].position;
  const PlaneEstimate plane = fit_local_plane(pts);
  slice.centroid = plane.centroid;
  slice.normal = plane.normal;
  slice.flatness = plane.eigenvalues[0];
  if (plane.degenerate) return slice;

  std::vector<double> distances(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    distances[i] = std::abs(plane.normal.dot(pts[i] - plane.centroid));
  }
  const double floor = kRoundoffDistance * std::sqrt(plane.eigenvalues[2]);
  const auto keep =
      consistent_mask(distances, params.mad_scale, params.consistency_threshold, floor);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (keep[i]) slice.consistent_set.push_back(slice.members[i]);
  }
  return slice;
}

std::vector<Slice> create_slices(const Cloud& cloud, const LinkageTable& table,
                                 const Params& params) {
  std::vector<IndexList> clusters(table.cluster_count);
  for (const auto& rec : table.records) {
    if (rec.cluster >= 0) clusters[static_cast<std::size_t>(rec.cluster)].push_back(rec.index);
  }
  std::vector<IndexList> kept;
  for (auto& c : clusters) {
    if (c.size() >= params.min_slice_size && c.size() >= 3) kept.push_back(std::move(c));
  }
  std::vector<Slice> slices(kept.size());
  parallel_for(kept.size(), params.workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) slices[i] = make_slice(cloud, std::move(kept[i]), params);
  });
  if (slices.empty()) {
    log_warning("create_slices: no cluster reached the minimum slice size of " +
                std::to_string(params.min_slice_size) + " points");
  }
  return slices;
}

Result segment(const Cloud& cloud, const Params& params) {
  Result result;
  result.knn = knn_index(cloud, params.k, params.workers);
  result.attributes = estimate_all_attributes(cloud, result.knn, params);
  result.linkage = build_linkage(result.attributes, params);
  result.slices = create_slices(cloud, result.linkage, params);
  return result;
}

}  // namespace facetrace::segmentation
