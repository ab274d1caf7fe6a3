#include "facetrace/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

namespace facetrace::oracle {
namespace {

using LVec = Eigen::Matrix<long double, 3, 1>;

LVec widen(const Vec3& v) { return v.cast<long double>(); }

struct Triangle {
  Vec3 a, b, c;
};

struct OracleFacet {
  std::uint32_t id;
  Vec3 normal;
  double offset;  // normal . x = offset on the plane
  std::vector<Vec3> corners;
  std::vector<Triangle> triangles;
};

OracleFacet prepare(const synth::GeneratingPlane& plane) {
  OracleFacet f;
  f.id = plane.id;
  f.corners = plane.polygon;
  const Vec3& p0 = plane.polygon[0];
  f.normal = (plane.polygon[1] - p0).cross(plane.polygon[plane.polygon.size() - 1] - p0).normalized();
  f.offset = f.normal.dot(p0);

  const int m = kTriangulationDensity;
  for (std::size_t i = 1; i + 1 < plane.polygon.size(); ++i) {
    const Vec3& a = p0;
    const Vec3 e1 = (plane.polygon[i] - a) / m;
    const Vec3 e2 = (plane.polygon[i + 1] - a) / m;
    for (int r = 0; r < m; ++r) {
      for (int s = 0; r + s < m; ++s) {
        const Vec3 base = a + r * e1 + s * e2;
        f.triangles.push_back({base, base + e1, base + e2});
        if (r + s + 1 < m) f.triangles.push_back({base + e1, base + e1 + e2, base + e2});
      }
    }
  }
  return f;
}

// Moller-Trumbore against origin + t * dir; barycentric bounds inclusive so shared
// triangle edges never leak.
std::optional<double> ray_triangle(const Vec3& origin, const Vec3& dir, const Triangle& tri) {
  const Vec3 e1 = tri.b - tri.a;
  const Vec3 e2 = tri.c - tri.a;
  const Vec3 h = dir.cross(e2);
  const double det = e1.dot(h);
  if (std::abs(det) <= 1e-14 * e1.norm() * e2.norm() * dir.norm()) return std::nullopt;
  const double inv = 1.0 / det;
  const Vec3 s = origin - tri.a;
  const double u = inv * s.dot(h);
  if (u < 0.0 || u > 1.0) return std::nullopt;
  const Vec3 q = s.cross(e1);
  const double v = inv * dir.dot(q);
  if (v < 0.0 || u + v > 1.0) return std::nullopt;
  return inv * e2.dot(q);
}

// First parameter at which origin + t * dir hits the facet, t within the given bounds.
std::optional<double> hit_facet(const Vec3& origin, const Vec3& dir, const OracleFacet& f,
                                bool include_start) {
  for (const auto& tri : f.triangles) {
    if (auto t = ray_triangle(origin, dir, tri)) {
      const bool lower_ok = include_start ? *t >= 0.0 : *t > 0.0;
      if (lower_ok && *t < 1.0) return t;
    }
  }
  return std::nullopt;
}

// Closest distance between segments p0p1 and q0q1, in extended precision.
long double segment_distance(const Vec3& p0_, const Vec3& p1_, const Vec3& q0_, const Vec3& q1_) {
  const LVec p0 = widen(p0_), q0 = widen(q0_);
  const LVec d1 = widen(p1_) - p0;
  const LVec d2 = widen(q1_) - q0;
  const LVec r = p0 - q0;
  const long double a = d1.dot(d1), e = d2.dot(d2), f = d2.dot(r);
  long double s = 0.0L, t = 0.0L;
  if (a <= 0.0L && e <= 0.0L) return r.norm();
  if (a <= 0.0L) {
    t = std::clamp(f / e, 0.0L, 1.0L);
  } else {
    const long double c = d1.dot(r);
    if (e <= 0.0L) {
      s = std::clamp(-c / a, 0.0L, 1.0L);
    } else {
      const long double b = d1.dot(d2);
      const long double denom = a * e - b * b;
      s = denom > 0.0L ? std::clamp((b * f - c * e) / denom, 0.0L, 1.0L) : 0.0L;
      t = (b * s + f) / e;
      if (t < 0.0L) {
        t = 0.0L;
        s = std::clamp(-c / a, 0.0L, 1.0L);
      } else if (t > 1.0L) {
        t = 1.0L;
        s = std::clamp((b - c) / a, 0.0L, 1.0L);
      }
    }
  }
  return ((p0 + s * d1) - (q0 + t * d2)).norm();
}

bool grazes(const Vec3& a, const Vec3& b, const OracleFacet& f) {
  const std::size_t n = f.corners.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (segment_distance(a, b, f.corners[i], f.corners[(i + 1) % n]) < kGrazingShell) return true;
  }
  return false;
}

double plane_height(const Vec3& p, const OracleFacet& f) { return f.normal.dot(p) - f.offset; }

}  // namespace

OracleVerdict oracle_classify(const Vec3& sat, const Vec3& receiver, const synth::SceneTruth& truth) {
  std::vector<OracleFacet> facets;
  facets.reserve(truth.planes.size());
  for (const auto& p : truth.planes) facets.push_back(prepare(p));

  OracleVerdict out;
  const Vec3 to_sat = sat - receiver;
  for (const auto& f : facets) {
    if (std::abs(plane_height(receiver, f)) < kGrazingShell) out.grazing = true;
    if (grazes(receiver, sat, f)) out.grazing = true;
    if (hit_facet(receiver, to_sat, f, false)) out.blocking.push_back(f.id);
  }

  for (const auto& f : facets) {
    const double hs = plane_height(sat, f);
    const double hr = plane_height(receiver, f);
    if (hs * hr <= 0.0) continue;
    // Householder reflection through the plane n.x = offset.
    const Eigen::Matrix3d householder = Eigen::Matrix3d::Identity() - 2.0 * f.normal * f.normal.transpose();
    const Vec3 mirror = householder * receiver + 2.0 * f.offset * f.normal;
    if (grazes(mirror, sat, f)) out.grazing = true;
    const auto t = hit_facet(mirror, sat - mirror, f, true);
    if (!t) continue;
    OracleReflection refl;
    refl.facet = f.id;
    refl.mirror = mirror;
    refl.point = mirror + *t * (sat - mirror);
    refl.delay = static_cast<double>((widen(sat) - widen(mirror)).norm() - (widen(sat) - widen(receiver)).norm());
    for (const auto& other : facets) {
      if (other.id == f.id) continue;
      if (grazes(refl.point, sat, other) || grazes(refl.point, receiver, other)) out.grazing = true;
      if (hit_facet(refl.point, sat - refl.point, other, false) ||
          hit_facet(refl.point, receiver - refl.point, other, false)) {
        refl.occluded = true;
      }
    }
    out.reflections.push_back(refl);
  }

  std::sort(out.blocking.begin(), out.blocking.end());
  std::sort(out.reflections.begin(), out.reflections.end(),
            [](const auto& a, const auto& b) { return a.facet < b.facet; });
  const bool any_visible =
      std::any_of(out.reflections.begin(), out.reflections.end(), [](const auto& r) { return !r.occluded; });
  if (out.blocking.empty()) {
    out.classification = any_visible ? SignalClass::kLosPlusNlos : SignalClass::kLos;
  } else {
    out.classification = any_visible ? SignalClass::kNlos : SignalClass::kBlocked;
  }
  return out;
}

std::vector<Vec2> oracle_hull(std::span<const Vec2> input) {
  std::vector<Vec2> pts(input.begin(), input.end());
  auto lex = [](const Vec2& a, const Vec2& b) { return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y()); };
  std::sort(pts.begin(), pts.end(), lex);
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  const std::size_t n = pts.size();
  if (n < 3) return pts;

  std::vector<bool> extreme(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const Vec2 edge = pts[j] - pts[i];
      bool hull_edge = true;
      for (std::size_t k = 0; k < n && hull_edge; ++k) {
        if (k == i || k == j) continue;
        const Vec2 w = pts[k] - pts[i];
        const double cross = edge.x() * w.y() - edge.y() * w.x();
        if (cross < 0.0) hull_edge = false;
        else if (cross == 0.0) {
          const double along = edge.dot(w);
          if (along < 0.0 || along > edge.squaredNorm()) hull_edge = false;
        }
      }
      if (hull_edge) extreme[i] = extreme[j] = true;
    }
  }
  std::vector<Vec2> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (extreme[i]) out.push_back(pts[i]);
  }
  return out;
}

std::vector<std::vector<PointIndex>> oracle_knn(std::span<const Vec3> points, std::size_t k) {
  const std::size_t n = points.size();
  std::vector<std::vector<PointIndex>> out(n);
  std::vector<std::pair<double, PointIndex>> all;
  for (std::size_t i = 0; i < n; ++i) {
    all.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double dx = points[j].x() - points[i].x();
      const double dy = points[j].y() - points[i].y();
      const double dz = points[j].z() - points[i].z();
      all.emplace_back(dx * dx + dy * dy + dz * dz, static_cast<PointIndex>(j));
    }
    std::sort(all.begin(), all.end());
    const std::size_t take = std::min(k, all.size());
    for (std::size_t m = 0; m < take; ++m) out[i].push_back(all[m].second);
  }
  return out;
}

}  // namespace facetrace::oracle
