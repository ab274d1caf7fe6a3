#include "facetrace/raytrace.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

#include "facetrace/parallel.hpp"

namespace facetrace {

std::string_view to_string(SignalClass c) {
  switch (c) {
    case SignalClass::kLos: return "LOS";
    case SignalClass::kBlocked: return "Blocked";
    case SignalClass::kNlos: return "NLOS";
    case SignalClass::kLosPlusNlos: return "LOS+NLOS";
  }
  return "?";
}

SignalClass parse_signal_class(std::string_view text) {
  if (text == "LOS") return SignalClass::kLos;
  if (text == "Blocked") return SignalClass::kBlocked;
  if (text == "NLOS") return SignalClass::kNlos;
  if (text == "LOS+NLOS") return SignalClass::kLosPlusNlos;
  throw std::invalid_argument("unknown signal class: " + std::string(text));
}

std::string_view to_string(DelayPolicy p) {
  switch (p) {
    case DelayPolicy::kMin: return "min";
    case DelayPolicy::kMax: return "max";
    case DelayPolicy::kAll: return "all";
  }
  return "?";
}

DelayPolicy parse_delay_policy(std::string_view text) {
  if (text == "min") return DelayPolicy::kMin;
  if (text == "max") return DelayPolicy::kMax;
  if (text == "all") return DelayPolicy::kAll;
  throw std::invalid_argument("unknown delay policy: " + std::string(text));
}

std::size_t RayPath::visible_reflections() const {
  return static_cast<std::size_t>(
      std::count_if(reflections.begin(), reflections.end(), [](const auto& r) { return !r.occluded; }));
}

namespace raytrace {
namespace {

constexpr double kInsideTolerance = 1e-6;   // rad, angle-sum classification
constexpr double kBoundaryShell = 1e-9;     // m, inclusive boundary
constexpr double kParallelTolerance = 1e-12;

bool near_boundary(const Vec3& q, const Facet& facet) {
  const std::size_t n = facet.boundary.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& a = facet.boundary[i];
    const Vec3& b = facet.boundary[(i + 1) % n];
    const Vec3 ab = b - a;
    const double len2 = ab.squaredNorm();
    double t = len2 > 0.0 ? (q - a).dot(ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    if ((a + t * ab - q).norm() <= kBoundaryShell) return true;
  }
  return false;
}

// Intersection of the segment near + s (far - near) with the facet plane,
// s in [s_min, 1). Containment is checked separately.
std::optional<Vec3> plane_crossing(const Vec3& far, const Vec3& near, const Plane& plane,
                                   bool include_near) {
  const Vec3 dir = far - near;
  const double denom = dir.dot(plane.normal);
  if (std::abs(denom) < kParallelTolerance * dir.norm()) return std::nullopt;
  const double s = (plane.anchor - near).dot(plane.normal) / denom;
  const bool in_range = include_near ? (s >= 0.0 && s < 1.0) : (s > 0.0 && s < 1.0);
  if (!in_range) return std::nullopt;
  return Vec3(near + s * dir);
}

}  // namespace

bool point_in_facet(const Vec3& q, const Facet& facet) {
  if ((q - facet.center).norm() > facet.radius + kBoundaryShell) return false;
  if (near_boundary(q, facet)) return true;

  const Vec3& n = facet.plane.normal;
  const std::size_t count = facet.boundary.size();
  double sum = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const Vec3 a = facet.boundary[i] - q;
    const Vec3 b = facet.boundary[(i + 1) % count] - q;
    sum += std::atan2(n.dot(a.cross(b)), a.dot(b));
  }
  if (std::abs(sum - 2.0 * kPi) < kInsideTolerance) return true;
  if (std::abs(sum) < kInsideTolerance) return false;
  return sum > kPi;
}

std::optional<Vec3> segment_crossing(const Vec3& far, const Vec3& near, const Facet& facet) {
  auto q = plane_crossing(far, near, facet.plane, false);
  if (q && point_in_facet(*q, facet)) return q;
  return std::nullopt;
}

std::optional<Vec3> direct_blocked(const Vec3& sat, const Vec3& receiver, const Facet& facet) {
  return segment_crossing(sat, receiver, facet);
}

Vec3 mirror_point(const Vec3& receiver, const Facet& facet) {
  const Vec3& n = facet.plane.normal;
  return receiver + 2.0 * (facet.plane.anchor - receiver).dot(n) * n;
}

double excess_path(const Vec3& sat, const Vec3& point, const Vec3& receiver) {
  const Vec3 qs = point - sat;
  const Vec3 rs = receiver - sat;
  // |Q-S| - |R-S| = (Q-R).((Q-S)+(R-S)) / (|Q-S|+|R-S|)
  const double far_leg = (point - receiver).dot(qs + rs) / (qs.norm() + rs.norm());
  return (receiver - point).norm() + far_leg;
}

std::optional<ReflectionGeometry> reflection_path(const Vec3& sat, const Vec3& receiver,
                                                  const Facet& facet) {
  const Plane& plane = facet.plane;
  const double sat_side = plane.normal.dot(sat - plane.anchor);
  const double rx_side = plane.normal.dot(receiver - plane.anchor);
  if (sat_side == 0.0 || sat_side * rx_side < 0.0) return std::nullopt;

  const Vec3 mirror = mirror_point(receiver, facet);
  // A receiver on the plane is its own mirror and reflection point.
  auto q = plane_crossing(sat, mirror, plane, true);
  if (!q || !point_in_facet(*q, facet)) return std::nullopt;
  return ReflectionGeometry{mirror, *q, excess_path(sat, *q, receiver)};
}

RayPath classify(const Vec3& sat, const Vec3& receiver, const PlanarMap& map, DelayPolicy policy) {
  RayPath path;
  const auto& facets = map.facets;
  for (const auto& facet : facets) {
    if (direct_blocked(sat, receiver, facet)) path.blocking_facets.push_back(facet.id);
    if (auto refl = reflection_path(sat, receiver, facet)) {
      path.reflections.push_back({facet.id, refl->mirror, refl->point, refl->delay, false});
    }
  }

  for (auto& r : path.reflections) {
    for (const auto& other : facets) {
      if (other.id == r.facet_id) continue;
      if (segment_crossing(sat, r.point, other) || segment_crossing(r.point, receiver, other)) {
        r.occluded = true;
        break;
      }
    }
  }

  std::sort(path.blocking_facets.begin(), path.blocking_facets.end());
  std::sort(path.reflections.begin(), path.reflections.end(),
            [](const auto& a, const auto& b) { return a.facet_id < b.facet_id; });

  const bool direct = path.blocking_facets.empty();
  const std::size_t visible = path.visible_reflections();
  if (direct) {
    path.classification = visible > 0 ? SignalClass::kLosPlusNlos : SignalClass::kLos;
  } else {
    path.classification = visible > 0 ? SignalClass::kNlos : SignalClass::kBlocked;
  }

  if (path.classification == SignalClass::kNlos) {
    double chosen = 0.0;
    bool first = true;
    double sum = 0.0;
    for (const auto& r : path.reflections) {
      if (r.occluded) continue;
      sum += r.delay;
      if (first || (policy == DelayPolicy::kMin && r.delay < chosen) ||
          (policy == DelayPolicy::kMax && r.delay > chosen)) {
        chosen = r.delay;
        first = false;
      }
    }
    path.applied_delay = policy == DelayPolicy::kAll ? sum / static_cast<double>(visible) : chosen;
  }
  return path;
}

TraceResult trace_run(std::span<const SatEpoch> sats, std::span<const ReceiverEpoch> route,
                      const PlanarMap& map, DelayPolicy policy, unsigned workers) {
  std::map<double, Vec3> receiver_at;
  for (const auto& r : route) receiver_at[r.epoch] = r.position;

  struct Job {
    double epoch;
    int prn;
    Vec3 sat;
    Vec3 receiver;
  };
  std::vector<Job> jobs;
  jobs.reserve(sats.size());
  TraceResult result;
  for (const auto& s : sats) {
    auto it = receiver_at.find(s.epoch);
    if (it == receiver_at.end()) {
      ++result.skipped;
      continue;
    }
    jobs.push_back({s.epoch, s.prn, s.position, it->second});
  }
  std::sort(jobs.begin(), jobs.end(), [](const Job& a, const Job& b) {
    return a.epoch < b.epoch || (a.epoch == b.epoch && a.prn < b.prn);
  });

  result.rows.resize(jobs.size());
  parallel_for(jobs.size(), workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      RayPath p = classify(jobs[i].sat, jobs[i].receiver, map, policy);
      p.epoch = jobs[i].epoch;
      p.prn = jobs[i].prn;
      result.rows[i] = std::move(p);
    }
  });
  return result;
}

}  // namespace raytrace
}  // namespace facetrace
