#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "facetrace/raytrace.hpp"
#include "facetrace/synth.hpp"
#include "facetrace/types.hpp"

// Brute-force reference implementations. Nothing here calls the production geometry:
// facets are triangulated and tested with Moller-Trumbore, mirrors use a Householder
// reflection, hulls use the exhaustive edge test and neighbors an exhaustive sort.
namespace facetrace::oracle {

struct OracleReflection {
  std::uint32_t facet = 0;
  Vec3 point = Vec3::Zero();
  Vec3 mirror = Vec3::Zero();
  double delay = 0.0;
  bool occluded = false;
};

struct OracleVerdict {
  SignalClass classification = SignalClass::kLos;
  std::vector<std::uint32_t> blocking;  // ascending
  std::vector<OracleReflection> reflections;  // ascending facet
  // Some tested segment passes within the grazing shell of a facet edge, or an
  // endpoint sits on a facet plane; such cases are excluded from equivalence counts.
  bool grazing = false;
};

inline constexpr double kGrazingShell = 1e-6;  // m

/// Subdivisions per fan triangle edge used when triangulating facets.
inline constexpr int kTriangulationDensity = 4;

OracleVerdict oracle_classify(const Vec3& sat, const Vec3& receiver, const synth::SceneTruth& truth);

/// Extreme points of the set (collinear boundary points excluded), sorted by (x, y).
std::vector<Vec2> oracle_hull(std::span<const Vec2> points);

/// K nearest other points of each point, ordered by (squared distance, index).
std::vector<std::vector<PointIndex>> oracle_knn(std::span<const Vec3> points, std::size_t k);

}  // namespace facetrace::oracle
