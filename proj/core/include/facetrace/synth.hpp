#pragma once

#include <cstdint>
#include <vector>

#include "facetrace/correction.hpp"
#include "facetrace/planar_map.hpp"
#include "facetrace/raytrace.hpp"
#include "facetrace/types.hpp"

namespace facetrace::synth {

/// Rectangular vertical wall used to generate a scene.
struct GeneratingPlane {
  std::uint32_t id = 0;
  Vec3 normal = Vec3::UnitX();  // horizontal, pointing into the street
  Vec3 anchor = Vec3::Zero();   // base center
  std::vector<Vec3> polygon;    // four corners, counterclockwise about the normal
  double width = 0.0;
  double height = 0.0;
};

struct InjectedDelay {
  double epoch = 0.0;
  int prn = 0;
  std::uint32_t facet = 0;
  double delay = 0.0;
};

struct SceneTruth {
  std::vector<GeneratingPlane> planes;
  std::vector<std::int32_t> labels;  // generating plane id per cloud point
  std::vector<InjectedDelay> injections;

  /// Truth walls as a planar map, facet id = plane id.
  PlanarMap to_map() const;
};

struct Scene {
  Cloud cloud;
  SceneTruth truth;
};

/// Wall with base center (x, y, base_z), facing `normal_yaw_rad` (0 = +x).
GeneratingPlane make_wall(std::uint32_t id, double x, double y, double normal_yaw_rad, double width,
                          double height, double base_z = 0.0);

/// Stratified sampling: round(density * width * height) points in round(height * sqrt(density))
/// rows, each jittered inside its cell and displaced along the normal by N(0, noise_sigma).
void sample_wall(const GeneratingPlane& wall, double density, double noise_sigma, std::uint64_t seed,
                 Cloud& cloud, std::vector<std::int32_t>& labels);

struct CanyonParams {
  int buildings = 6;
  double street_width = 40.0;
  double noise_sigma = 0.05;
  double density = 50.0;  // points per square meter
  std::uint64_t seed = 1;
  double min_width = 10.0;
  double max_width = 25.0;
  double min_height = 15.0;
  double max_height = 60.0;
  double gap = 4.0;             // along-street spacing between facades
  double max_setback = 3.0;     // extra distance behind the street edge
  double max_yaw_deg = 15.0;
  double yaw_probability = 0.5;
  bool sample_points = true;    // false -> truth only, empty cloud
};

/// Facades along both sides of a street running north (y); even buildings on +x.
Scene generate_canyon(const CanyonParams& params);

/// Fixed layout of six separated facades, three per side, two of them yawed.
Scene six_plane_scene(double noise_sigma, double density, std::uint64_t seed);

/// Receiver uniformly inside the street between the first and last facade, 1.5 m above ground.
Vec3 random_street_receiver(const CanyonParams& params, const SceneTruth& truth, std::uint64_t seed);

/// Satellites at 20,200 km range in uniformly random directions above `min_elevation_deg`.
std::vector<Vec3> random_satellites(std::size_t count, double min_elevation_deg, std::uint64_t seed,
                                    const Vec3& receiver = Vec3::Zero());

/// Facades of three height classes along a long street: low (top below 10 m), in band
/// (ground to 15-50 m) and high (base above 65 m). `out_of_band_fraction` of the facets,
/// split evenly between low and high, never overlap [10, 60] m.
SceneTruth mixed_height_scene(std::size_t facets, double out_of_band_fraction, double street_width,
                              std::uint64_t seed);

struct NlosScenarioParams {
  int epochs = 600;
  double street_width = 40.0;
  double wall_height = 40.0;
  double wall_half_length = 500.0;
  double clock_bias_m = 120.0;
  double noise_sigma = 0.0;  // pseudorange noise, meters
  std::uint64_t seed = 7;
};

/// Receiver driving along a two-wall canyon with ten satellites. Four are blocked by
/// the west wall and received only via the east wall; the rest are direct.
struct NlosScenario {
  SceneTruth truth;  // walls and exact injected delays; no cloud labels
  std::vector<SatEpoch> sats;
  std::vector<ReceiverEpoch> route;
  std::vector<Observation> observations;
  double clock_bias_m = 0.0;
};

NlosScenario nlos_scenario(const NlosScenarioParams& params);

}  // namespace facetrace::synth
