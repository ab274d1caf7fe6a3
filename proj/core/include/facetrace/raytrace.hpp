#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "facetrace/planar_map.hpp"
#include "facetrace/types.hpp"

namespace facetrace {

enum class SignalClass { kLos, kBlocked, kNlos, kLosPlusNlos };

std::string_view to_string(SignalClass c);
SignalClass parse_signal_class(std::string_view text);

/// Which reflection delay is applied to an NLOS signal with several reflectors.
enum class DelayPolicy { kMin, kMax, kAll };

std::string_view to_string(DelayPolicy p);
DelayPolicy parse_delay_policy(std::string_view text);

struct SatEpoch {
  double epoch = 0.0;
  int prn = 0;
  Vec3 position = Vec3::Zero();  // enu-frame inside the library
};

struct ReceiverEpoch {
  double epoch = 0.0;
  Vec3 position = Vec3::Zero();
};

struct Reflection {
  std::uint32_t facet_id = 0;
  Vec3 mirror = Vec3::Zero();  // receiver mirrored through the facet plane
  Vec3 point = Vec3::Zero();   // specular reflection point on the facet
  double delay = 0.0;          // excess path over the direct distance, meters
  bool occluded = false;       // S->point or point->R crosses another facet
};

struct RayPath {
  double epoch = 0.0;
  int prn = 0;
  SignalClass classification = SignalClass::kLos;
  std::vector<std::uint32_t> blocking_facets;  // ascending
  std::vector<Reflection> reflections;         // ascending facet id
  double applied_delay = 0.0;

  std::size_t visible_reflections() const;
};

namespace raytrace {

/// Angle-sum containment test for a point on (or within 1e-6 m of) the facet plane.
/// Points within 1e-9 m of the boundary count as inside.
bool point_in_facet(const Vec3& q, const Facet& facet);

/// Crossing of the open segment from `far` to `near` with the facet, if any.
/// The intersection is parameterized from `near`, which keeps it precise when
/// `far` is a satellite thousands of kilometers away.
std::optional<Vec3> segment_crossing(const Vec3& far, const Vec3& near, const Facet& facet);

/// Intersection Q of the satellite-receiver segment with the facet, if it blocks.
std::optional<Vec3> direct_blocked(const Vec3& sat, const Vec3& receiver, const Facet& facet);

/// Receiver mirrored through the facet plane: R' = R + 2((A - R).n) n.
Vec3 mirror_point(const Vec3& receiver, const Facet& facet);

struct ReflectionGeometry {
  Vec3 mirror;
  Vec3 point;
  double delay;
};

/// Single-bounce specular path off the facet. Requires the satellite and receiver on the
/// same side of the plane and the reflection point inside the facet.
std::optional<ReflectionGeometry> reflection_path(const Vec3& sat, const Vec3& receiver,
                                                  const Facet& facet);

/// Excess path length |Q-S| + |R-Q| - |R-S|, evaluated without cancellation
/// at satellite distances.
double excess_path(const Vec3& sat, const Vec3& point, const Vec3& receiver);

RayPath classify(const Vec3& sat, const Vec3& receiver, const PlanarMap& map,
                 DelayPolicy policy = DelayPolicy::kMin);

struct TraceResult {
  std::vector<RayPath> rows;  // epoch-major, prn-minor
  std::size_t skipped = 0;    // satellite rows without a receiver epoch
};

TraceResult trace_run(std::span<const SatEpoch> sats, std::span<const ReceiverEpoch> route,
                      const PlanarMap& map, DelayPolicy policy = DelayPolicy::kMin,
                      unsigned workers = 1);

}  // namespace raytrace
}  // namespace facetrace
