#include "facetrace/margins.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "facetrace/parallel.hpp"

namespace facetrace::margins {
namespace {

constexpr double kEarthGm = 3.986004418e14;        // m^3/s^2
constexpr double kEarthRotation = 7.2921151467e-5;  // rad/s
constexpr double kDegenerate = 1e-12;

constexpr double kOutwardCap = 1000.0;   // m
constexpr double kTiltCap = kPi / 4.0;   // rad

// Works in the frame where the chosen wall sits at x = +width/2; the negative wall is
// handled by mirroring x.
Vec3 to_positive_frame(const Vec3& v, WallSide side) {
  return side == WallSide::kPositive ? v : Vec3(-v.x(), v.y(), v.z());
}

struct Geometry {
  double wall;  // x of the wall, > a
  double xs, zs;
  double a, c;
};

Geometry geometry(const Vec3& sat, const CanyonConfig& cfg, WallSide side) {
  const Vec3 s = to_positive_frame(sat, side);
  const Vec3 r = to_positive_frame(cfg.receiver, side);
  return {0.5 * cfg.street_width, s.x(), s.z(), r.x(), r.z()};
}

// t (c - z_s) + z_s rewritten about the receiver end, c + (1 - t)(z_s - c), with
// 1 - t = (wall - a) / denom. Same value, but no cancellation when z_s is ~2e7 m.
double anchored_height(const Geometry& g, double wall, double denom) {
  return g.c + ((wall - g.a) / denom) * (g.zs - g.c);
}

// Height where the line from the satellite to the mirrored receiver crosses a vertical
// wall at x = wall; empty unless the crossing lies strictly between them.
std::optional<double> vertical_wall_height(const Geometry& g, double wall) {
  if (!(g.a < wall)) return std::nullopt;
  const double denom = 2.0 * wall - g.a - g.xs;
  if (std::abs(denom) < kDegenerate) return std::nullopt;
  const double t = (wall - g.xs) / denom;
  if (!(t > 0.0 && t < 1.0)) return std::nullopt;
  return anchored_height(g, wall, denom);
}

// Largest |x| along `direction` with feasible(x), by doubling then bisection.
double search_margin(const std::function<bool(double)>& feasible, double direction, double cap,
                     double initial_step, double tolerance) {
  double lo = 0.0;
  double hi = std::min(initial_step, cap);
  while (hi < cap && feasible(direction * hi)) {
    lo = hi;
    hi = std::min(2.0 * hi, cap);
  }
  if (hi >= cap && feasible(direction * cap)) return direction * cap;
  while (hi - lo > tolerance) {
    const double mid = 0.5 * (lo + hi);
    if (feasible(direction * mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return direction * lo;
}

void accumulate_agreement(AgreementStats& stats, double closed_form, double oracle) {
  const double diff = std::abs(closed_form - oracle);
  ++stats.compared;
  stats.mean_abs_difference += diff;
  stats.max_abs_difference = std::max(stats.max_abs_difference, diff);
  if (oracle != 0.0 && diff <= 0.1 * std::abs(oracle)) ++stats.within_10_percent;
}

}  // namespace

std::optional<double> reflection_height(const Vec3& sat, const CanyonConfig& cfg, WallSide side) {
  const Geometry g = geometry(sat, cfg, side);
  const double denom = 2.0 * g.wall - g.a - g.xs;
  if (std::abs(denom) < kDegenerate) return std::nullopt;
  return anchored_height(g, g.wall, denom);
}

bool reflection_is_physical(const Vec3& sat, const CanyonConfig& cfg, WallSide side) {
  const Geometry g = geometry(sat, cfg, side);
  return vertical_wall_height(g, g.wall).has_value();
}

double orbital_period(double semi_major_axis_m) {
  return 2.0 * kPi * std::sqrt(semi_major_axis_m * semi_major_axis_m * semi_major_axis_m / kEarthGm);
}

std::vector<SatEpoch> synth_constellation(const ConstellationParams& params) {
  if (params.satellites <= 0 || params.planes <= 0 || params.satellites % params.planes != 0) {
    throw std::invalid_argument("constellation: satellites must be a positive multiple of planes");
  }
  if (!(params.step_s > 0.0)) throw std::invalid_argument("constellation: step must be positive");
  const frames::FrameOrigin origin(params.receiver);
  const double period = orbital_period(params.semi_major_axis_m);
  const double duration = params.duration_s > 0.0 ? params.duration_s : period;
  const double mean_motion = 2.0 * kPi / period;
  const double incl = params.inclination_deg * kDegToRad;
  const int per_plane = params.satellites / params.planes;
  const double mask = params.elevation_mask_deg * kDegToRad;
  const double r = params.semi_major_axis_m;

  std::vector<SatEpoch> out;
  const auto epochs = static_cast<std::size_t>(std::ceil(duration / params.step_s));
  for (std::size_t e = 0; e < epochs; ++e) {
    const double t = static_cast<double>(e) * params.step_s;
    const double earth_angle = kEarthRotation * t;
    for (int p = 0; p < params.planes; ++p) {
      const double raan = 2.0 * kPi * p / params.planes;
      for (int k = 0; k < per_plane; ++k) {
        const double phase = 2.0 * kPi * k / per_plane +
                             2.0 * kPi * params.phasing * p / params.satellites;
        const double u = phase + mean_motion * t;
        const Vec3 inertial(r * (std::cos(raan) * std::cos(u) - std::sin(raan) * std::sin(u) * std::cos(incl)),
                            r * (std::sin(raan) * std::cos(u) + std::cos(raan) * std::sin(u) * std::cos(incl)),
                            r * std::sin(u) * std::sin(incl));
        const Vec3 ecef(std::cos(earth_angle) * inertial.x() + std::sin(earth_angle) * inertial.y(),
                        -std::sin(earth_angle) * inertial.x() + std::cos(earth_angle) * inertial.y(),
                        inertial.z());
        const Vec3 enu = frames::ecef_to_enu(ecef, origin);
        if (frames::elevation(enu) > mask) {
          out.push_back({t, p * per_plane + k + 1, enu});
        }
      }
    }
  }
  return out;
}

Histogram Histogram::build(std::span<const double> values, double lo, double hi, double width) {
  if (!(width > 0.0) || !(hi > lo)) throw std::invalid_argument("histogram: invalid bin layout");
  Histogram h;
  const auto inner = static_cast<std::size_t>(std::ceil((hi - lo) / width - 1e-9));
  const double inf = std::numeric_limits<double>::infinity();
  h.bins.push_back({-inf, lo, 0});
  for (std::size_t i = 0; i < inner; ++i) {
    h.bins.push_back({lo + static_cast<double>(i) * width,
                      std::min(hi, lo + static_cast<double>(i + 1) * width), 0});
  }
  h.bins.push_back({hi, inf, 0});
  for (double v : values) {
    std::size_t bin;
    if (v < lo) {
      bin = 0;
    } else if (v >= hi) {
      bin = h.bins.size() - 1;
    } else {
      bin = 1 + std::min(inner - 1, static_cast<std::size_t>((v - lo) / width));
    }
    ++h.bins[bin].count;
    ++h.total;
  }
  return h;
}

double Histogram::fraction(std::size_t bin) const {
  return total == 0 ? 0.0 : static_cast<double>(bins.at(bin).count) / static_cast<double>(total);
}

HeightSweep height_histogram(std::span<const SatEpoch> constellation, const CanyonConfig& cfg,
                             double band_lo, double band_hi, double bin_width) {
  HeightSweep sweep;
  sweep.band_lo = band_lo;
  sweep.band_hi = band_hi;
  for (const auto& s : constellation) {
    for (WallSide side : {WallSide::kPositive, WallSide::kNegative}) {
      if (!reflection_is_physical(s.position, cfg, side)) continue;
      const auto h = reflection_height(s.position, cfg, side);
      if (h && *h > 0.0) sweep.heights.push_back(*h);
    }
  }
  sweep.histogram = Histogram::build(sweep.heights, 0.0, 200.0, bin_width);
  const auto in_band = std::count_if(sweep.heights.begin(), sweep.heights.end(),
                                     [&](double h) { return h >= band_lo && h <= band_hi; });
  sweep.band_fraction = sweep.heights.empty()
                            ? 0.0
                            : static_cast<double>(in_band) / static_cast<double>(sweep.heights.size());
  return sweep;
}

std::optional<double> shifted_wall_height(const Vec3& sat, const CanyonConfig& cfg, WallSide side,
                                          double shift) {
  const Geometry g = geometry(sat, cfg, side);
  return vertical_wall_height(g, g.wall + shift);
}

std::optional<double> tilted_wall_height(const Vec3& sat, const CanyonConfig& cfg, WallSide side,
                                         double angle) {
  const Vec3 s = to_positive_frame(sat, side);
  const Vec3 r = to_positive_frame(cfg.receiver, side);
  const Vec3 base(0.5 * cfg.street_width, 0.0, 0.0);
  // Leaning toward the street moves the top of the wall toward -x.
  const Vec3 n(std::cos(angle), 0.0, std::sin(angle));
  const double rx_side = n.dot(r - base);
  const double sat_side = n.dot(s - base);
  if (!(rx_side < 0.0 && sat_side < 0.0)) return std::nullopt;
  const Vec3 mirror = r - 2.0 * rx_side * n;
  const double denom = n.dot(s - mirror);
  if (std::abs(denom) < kDegenerate) return std::nullopt;
  const double k = n.dot(base - mirror) / denom;
  if (!(k > 0.0 && k < 1.0)) return std::nullopt;
  return mirror.z() + k * (s.z() - mirror.z());
}

TranslationMargin translation_margin(const Vec3& sat, const CanyonConfig& cfg, WallSide side,
                                     double height, double tolerance) {
  const Geometry g = geometry(sat, cfg, side);
  TranslationMargin m;

  const double a = g.a, c = g.c, xs = g.xs, zs = g.zs, H = height, l = tolerance;
  const double d1 = 2.0 * H + 2.0 * l - c - zs;
  const double d2 = 2.0 * H - 2.0 * l - c - zs;
  if (std::abs(d1) > kDegenerate && std::abs(d2) > kDegenerate) {
    m.closed_form = ((H + l) * (xs + a) - c * xs - zs * a) / d1 +
                    ((H - l) * (xs + a) - c * xs - zs * a) / d2;
  }

  auto feasible = [&](double shift) {
    const auto h = vertical_wall_height(g, g.wall + shift);
    return h && std::abs(*h - height) <= tolerance;
  };
  const double inward_cap = (g.wall - g.a) * (1.0 - 1e-9);
  m.outward = search_margin(feasible, 1.0, kOutwardCap, 0.25, kTranslationTolerance);
  m.inward = search_margin(feasible, -1.0, inward_cap, 0.25, kTranslationTolerance);
  return m;
}

TiltMargin tilt_margin(const Vec3& sat, const CanyonConfig& cfg, WallSide side, double height,
                       double tolerance) {
  const Geometry g = geometry(sat, cfg, side);
  TiltMargin m;

  const double a = g.a, c = g.c, xs = g.xs, zs = g.zs, H = height, l = tolerance;
  const double half = g.wall;
  const double width = 2.0 * g.wall;
  const double d1 = (c - zs) * (H + l);
  const double d2 = (c - zs) * (l - H);
  if (std::abs(d1) > kDegenerate && std::abs(d2) > kDegenerate) {
    m.closed_form = ((H + l) * (width - xs - a) + (xs - half) * c - zs * (half - a)) / d1 +
                    ((H - l) * (width - xs - a) + (xs - half) * c - zs * (half - a)) / d2;
  }

  auto feasible = [&](double angle) {
    const auto h = tilted_wall_height(sat, cfg, side, angle);
    return h && std::abs(*h - height) <= tolerance;
  };
  m.toward = search_margin(feasible, 1.0, kTiltCap, 1e-3, kTiltTolerance);
  m.away = search_margin(feasible, -1.0, kTiltCap, 1e-3, kTiltTolerance);
  return m;
}

MarginDistributions margin_distributions(std::span<const SatEpoch> constellation,
                                         const CanyonConfig& cfg, double tolerance,
                                         unsigned workers) {
  if (!(tolerance > 0.0)) throw std::invalid_argument("margin_distributions: l must be positive");
  MarginDistributions out;
  for (const auto& s : constellation) {
    for (WallSide side : {WallSide::kPositive, WallSide::kNegative}) {
      if (!reflection_is_physical(s.position, cfg, side)) continue;
      const auto h = reflection_height(s.position, cfg, side);
      if (!h || *h <= 0.0) continue;
      MarginSample sample;
      sample.epoch = s.epoch;
      sample.prn = s.prn;
      sample.side = side;
      sample.sat = s.position;
      sample.height = *h;
      sample.tolerance = tolerance;
      out.samples.push_back(sample);
    }
  }

  parallel_for(out.samples.size(), workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      auto& s = out.samples[i];
      s.translation = translation_margin(s.sat, cfg, s.side, s.height, s.tolerance);
      s.tilt = tilt_margin(s.sat, cfg, s.side, s.height, s.tolerance);
    }
  });

  std::vector<double> shifts;
  std::vector<double> tilts_deg;
  shifts.reserve(2 * out.samples.size());
  tilts_deg.reserve(2 * out.samples.size());
  for (const auto& s : out.samples) {
    shifts.push_back(s.translation.outward);
    shifts.push_back(s.translation.inward);
    tilts_deg.push_back(s.tilt.toward * kRadToDeg);
    tilts_deg.push_back(s.tilt.away * kRadToDeg);
    if (s.translation.closed_form) {
      accumulate_agreement(out.translation_agreement, *s.translation.closed_form,
                                         s.translation.total());
    }
    if (s.tilt.closed_form && s.tilt.total() < 5.0 * kDegToRad) {
      accumulate_agreement(out.tilt_agreement, *s.tilt.closed_form, s.tilt.total());
    }
  }
  for (auto* stats : {&out.translation_agreement, &out.tilt_agreement}) {
    if (stats->compared > 0) stats->mean_abs_difference /= static_cast<double>(stats->compared);
  }

  out.translation = Histogram::build(shifts, -5.0, 5.0, 0.1);
  out.tilt = Histogram::build(tilts_deg, -20.0, 20.0, 0.5);
  auto fraction_within = [](const std::vector<double>& v, double band) {
    if (v.empty()) return 0.0;
    const auto n = std::count_if(v.begin(), v.end(), [&](double x) { return std::abs(x) <= band; });
    return static_cast<double>(n) / static_cast<double>(v.size());
  };
  out.translation_fraction = fraction_within(shifts, out.translation_band);
  out.tilt_fraction = fraction_within(tilts_deg, out.tilt_band_deg);
  return out;
}

}  // namespace facetrace::margins
