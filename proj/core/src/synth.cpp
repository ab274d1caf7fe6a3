#include "facetrace/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace facetrace::synth {
namespace {

constexpr double kSatelliteRange = 20'200'000.0;

double snap(double v) { return std::abs(v) < 1e-15 ? 0.0 : v; }

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer keeps per-wall streams independent of generation order
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Vec3 direction(double azimuth_deg, double elevation_deg) {
  const double az = azimuth_deg * kDegToRad;
  const double el = elevation_deg * kDegToRad;
  return {std::cos(el) * std::sin(az), std::cos(el) * std::cos(az), std::sin(el)};
}

long double distance_ld(const Vec3& a, const Vec3& b) {
  const long double dx = static_cast<long double>(a.x()) - b.x();
  const long double dy = static_cast<long double>(a.y()) - b.y();
  const long double dz = static_cast<long double>(a.z()) - b.z();
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

// Crossing of segment a->b with the vertical plane x = wall_x, returned as (y, z).
std::optional<Vec2> cross_x_plane(const Vec3& a, const Vec3& b, double wall_x) {
  const double dx = b.x() - a.x();
  if (dx == 0.0) return std::nullopt;
  const double t = (wall_x - a.x()) / dx;
  if (t <= 0.0 || t >= 1.0) return std::nullopt;
  return Vec2(a.y() + t * (b.y() - a.y()), a.z() + t * (b.z() - a.z()));
}

bool on_wall(const std::optional<Vec2>& yz, double half_length, double height) {
  return yz && std::abs(yz->x()) < half_length && yz->y() > 0.0 && yz->y() < height;
}

}  // namespace

PlanarMap SceneTruth::to_map() const {
  PlanarMap map;
  for (const auto& p : planes) map.facets.push_back(make_facet(p.id, p.polygon, p.id));
  map.provenance["source"] = "synthetic truth";
  return map;
}

GeneratingPlane make_wall(std::uint32_t id, double x, double y, double normal_yaw_rad, double width,
                          double height, double base_z) {
  GeneratingPlane w;
  w.id = id;
  w.normal = Vec3(snap(std::cos(normal_yaw_rad)), snap(std::sin(normal_yaw_rad)), 0.0);
  w.anchor = Vec3(x, y, base_z);
  w.width = width;
  w.height = height;
  const Vec3 along = Vec3::UnitZ().cross(w.normal);
  const Vec3 up(0.0, 0.0, height);
  const Vec3 p0 = w.anchor - 0.5 * width * along;
  const Vec3 p1 = w.anchor + 0.5 * width * along;
  w.polygon = {p0, p1, p1 + up, p0 + up};
  return w;
}

void sample_wall(const GeneratingPlane& wall, double density, double noise_sigma, std::uint64_t seed,
                 Cloud& cloud, std::vector<std::int32_t>& labels) {
  if (density <= 0.0) throw std::invalid_argument("density must be positive");
  const auto total = static_cast<std::size_t>(std::llround(density * wall.width * wall.height));
  const auto rows = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(wall.height * std::sqrt(density))));
  const Vec3 along = Vec3::UnitZ().cross(wall.normal);

  std::mt19937_64 rng(mix_seed(seed, wall.id));
  std::uniform_real_distribution<double> jitter(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, noise_sigma > 0.0 ? noise_sigma : 1.0);

  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t count = total / rows + (r < total % rows ? 1 : 0);
    for (std::size_t c = 0; c < count; ++c) {
      const double v = (static_cast<double>(r) + jitter(rng)) / static_cast<double>(rows) * wall.height;
      const double u = (static_cast<double>(c) + jitter(rng)) / static_cast<double>(count) * wall.width -
                       0.5 * wall.width;
      Vec3 p = wall.anchor + u * along + Vec3(0.0, 0.0, v);
      if (noise_sigma > 0.0) p += noise(rng) * wall.normal;
      cloud.push_back({static_cast<PointIndex>(cloud.size()), p});
      labels.push_back(static_cast<std::int32_t>(wall.id));
    }
  }
}

Scene generate_canyon(const CanyonParams& params) {
  if (params.buildings < 0) throw std::invalid_argument("building count must be non-negative");
  if (params.street_width <= 0.0) throw std::invalid_argument("street width must be positive");
  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto between = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  Scene scene;
  double cursor[2] = {0.0, 0.0};
  for (int b = 0; b < params.buildings; ++b) {
    const int side = b % 2;  // 0: east side (+x), 1: west side (-x)
    const double width = between(params.min_width, params.max_width);
    const double height = between(params.min_height, params.max_height);
    const double setback = between(0.0, params.max_setback);
    const double yaw = unit(rng) < params.yaw_probability
                           ? between(-params.max_yaw_deg, params.max_yaw_deg) * kDegToRad
                           : 0.0;
    const double half_depth = 0.5 * width * std::abs(std::sin(yaw));
    const double extent = width * std::abs(std::cos(yaw));
    const double x = (0.5 * params.street_width + setback + half_depth) * (side == 0 ? 1.0 : -1.0);
    const double y = cursor[side] + 0.5 * extent;
    cursor[side] += extent + params.gap;
    const double facing = (side == 0 ? kPi : 0.0) + yaw;
    scene.truth.planes.push_back(make_wall(static_cast<std::uint32_t>(b), x, y, facing, width, height));
  }
  // Center each side of the street on y = 0.
  for (auto& p : scene.truth.planes) {
    const int side = p.anchor.x() > 0.0 ? 0 : 1;
    const Vec3 shift(0.0, -0.5 * (cursor[side] - params.gap), 0.0);
    p.anchor += shift;
    for (auto& v : p.polygon) v += shift;
  }
  if (params.sample_points) {
    for (const auto& p : scene.truth.planes) {
      sample_wall(p, params.density, params.noise_sigma, params.seed, scene.cloud, scene.truth.labels);
    }
  }
  return scene;
}

Scene six_plane_scene(double noise_sigma, double density, std::uint64_t seed) {
  struct Layout {
    double x, y, yaw_deg, width, height;
  };
  // East facades face -x, west facades face +x.
  const Layout layout[6] = {
      {20.0, -32.0, 180.0, 12.0, 18.0}, {22.0, 0.0, 170.0, 12.0, 16.0}, {20.0, 30.0, 180.0, 14.0, 20.0},
      {-20.0, -30.0, 0.0, 12.0, 15.0},  {-21.0, 2.0, 12.0, 12.0, 17.0}, {-20.0, 32.0, 0.0, 13.0, 19.0},
  };
  Scene scene;
  for (std::uint32_t i = 0; i < 6; ++i) {
    const auto& l = layout[i];
    scene.truth.planes.push_back(make_wall(i, l.x, l.y, l.yaw_deg * kDegToRad, l.width, l.height));
    sample_wall(scene.truth.planes.back(), density, noise_sigma, seed, scene.cloud, scene.truth.labels);
  }
  return scene;
}

Vec3 random_street_receiver(const CanyonParams& params, const SceneTruth& truth, std::uint64_t seed) {
  double y_lo = 0.0, y_hi = 0.0;
  for (const auto& p : truth.planes) {
    y_lo = std::min(y_lo, p.anchor.y());
    y_hi = std::max(y_hi, p.anchor.y());
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double half = 0.5 * params.street_width - 1.0;
  return {-half + 2.0 * half * unit(rng), y_lo + (y_hi - y_lo) * unit(rng), 1.5};
}

std::vector<Vec3> random_satellites(std::size_t count, double min_elevation_deg, std::uint64_t seed,
                                    const Vec3& receiver) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double sin_lo = std::sin(min_elevation_deg * kDegToRad);
  std::vector<Vec3> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double az = 360.0 * unit(rng);
    const double el = std::asin(sin_lo + (1.0 - sin_lo) * unit(rng)) * kRadToDeg;
    out.push_back(receiver + kSatelliteRange * direction(az, el));
  }
  return out;
}

SceneTruth mixed_height_scene(std::size_t facets, double out_of_band_fraction, double street_width,
                              std::uint64_t seed) {
  if (out_of_band_fraction < 0.0 || out_of_band_fraction > 1.0) {
    throw std::invalid_argument("out_of_band_fraction must be in [0, 1]");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto between = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  const auto out_count = static_cast<std::size_t>(std::llround(out_of_band_fraction * facets));
  std::vector<int> kind(facets, 0);  // 0 in band, 1 low, 2 high
  for (std::size_t i = 0; i < out_count; ++i) kind[i] = i % 2 == 0 ? 1 : 2;
  std::shuffle(kind.begin(), kind.end(), rng);

  SceneTruth truth;
  double cursor[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < facets; ++i) {
    const int side = static_cast<int>(i % 2);
    const double width = between(8.0, 20.0);
    double base = 0.0, height = 0.0;
    switch (kind[i]) {
      case 0: height = between(15.0, 50.0); break;
      case 1: height = between(3.0, 8.0); break;
      default:
        base = between(65.0, 80.0);
        height = between(10.0, 40.0);
    }
    const double setback = between(0.0, 3.0);
    const double x = (0.5 * street_width + setback) * (side == 0 ? 1.0 : -1.0);
    const double y = cursor[side] + 0.5 * width;
    cursor[side] += width + 2.0;
    truth.planes.push_back(
        make_wall(static_cast<std::uint32_t>(i), x, y, side == 0 ? kPi : 0.0, width, height, base));
  }
  const double shift = -0.5 * std::max(cursor[0], cursor[1]);
  for (auto& p : truth.planes) {
    p.anchor.y() += shift;
    for (auto& v : p.polygon) v.y() += shift;
  }
  return truth;
}

NlosScenario nlos_scenario(const NlosScenarioParams& params) {
  struct Sky {
    int prn;
    double az, el;
    bool nlos;
  };
  const Sky sky[10] = {
      {1, 0.0, 30.0, false},   {2, 180.0, 35.0, false}, {3, 90.0, 75.0, false},
      {4, 270.0, 80.0, false}, {5, 30.0, 65.0, false},  {6, 315.0, 66.0, false},
      {7, 270.0, 45.0, true},  {8, 250.0, 40.0, true},  {9, 290.0, 50.0, true},
      {10, 235.0, 38.0, true},
  };
  const double half_w = 0.5 * params.street_width;
  const double H = params.wall_height;
  const double L = params.wall_half_length;

  NlosScenario sc;
  sc.clock_bias_m = params.clock_bias_m;
  sc.truth.planes.push_back(make_wall(0, -half_w, 0.0, 0.0, 2.0 * L, H));  // west
  sc.truth.planes.push_back(make_wall(1, half_w, 0.0, kPi, 2.0 * L, H));   // east

  std::mt19937_64 rng(params.seed);
  std::normal_distribution<double> noise(0.0, params.noise_sigma > 0.0 ? params.noise_sigma : 1.0);

  for (int k = 0; k < params.epochs; ++k) {
    const double epoch = static_cast<double>(k);
    const Vec3 rx(4.0 + 3.0 * std::sin(2.0 * kPi * k / 200.0), -150.0 + 0.5 * k, 1.5);
    sc.route.push_back({epoch, rx});
    for (const auto& s : sky) {
      const Vec3 sat = rx + kSatelliteRange * direction(s.az, s.el);
      sc.sats.push_back({epoch, s.prn, sat});

      const bool west_blocks = on_wall(cross_x_plane(rx, sat, -half_w), L, H);
      const bool east_blocks = on_wall(cross_x_plane(rx, sat, half_w), L, H);
      double delay = 0.0;
      if (s.nlos) {
        const Vec3 mirror(2.0 * half_w - rx.x(), rx.y(), rx.z());
        const auto q = cross_x_plane(sat, mirror, half_w);
        const bool reflects = on_wall(q, L, H);
        const Vec3 q3(half_w, q ? q->x() : 0.0, q ? q->y() : 0.0);
        const bool occluded = on_wall(cross_x_plane(q3, sat, -half_w), L, H);
        if (!west_blocks || !reflects || occluded) {
          throw std::logic_error("nlos scenario geometry is not NLOS at epoch " + std::to_string(k));
        }
        delay = static_cast<double>(distance_ld(sat, mirror) - distance_ld(sat, rx));
        sc.truth.injections.push_back({epoch, s.prn, 1, delay});
      } else if (west_blocks || east_blocks) {
        throw std::logic_error("nlos scenario direct satellite is blocked at epoch " + std::to_string(k));
      }
      double pr = static_cast<double>(distance_ld(sat, rx)) + params.clock_bias_m + delay;
      if (params.noise_sigma > 0.0) pr += noise(rng);
      sc.observations.push_back({epoch, s.prn, pr});
    }
  }
  return sc;
}

}  // namespace facetrace::synth
