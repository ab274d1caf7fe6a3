#pragma once

#include <optional>
#include <span>
#include <vector>

#include "facetrace/frames.hpp"
#include "facetrace/raytrace.hpp"
#include "facetrace/types.hpp"

namespace facetrace::margins {

/// Street canyon with infinite walls at x = +/- street_width / 2 (local ENU frame)
/// and a receiver at (a, b, c).
struct CanyonConfig {
  double street_width = 40.0;
  Vec3 receiver = Vec3::Zero();
};

enum class WallSide { kPositive, kNegative };

/// Height of the specular reflection point on the chosen wall:
/// H = ((x_w - x_s) / (2 x_w - a - x_s)) (c - z_s) + z_s with x_w = +/- width / 2.
/// Empty when the denominator vanishes.
std::optional<double> reflection_height(const Vec3& sat, const CanyonConfig& cfg, WallSide side);

/// True when the mirror-path parameter lies in (0, 1): the satellite is on the receiver's
/// side of the wall and the reflection point lies between them.
bool reflection_is_physical(const Vec3& sat, const CanyonConfig& cfg, WallSide side);

struct ConstellationParams {
  int satellites = 24;
  int planes = 6;
  int phasing = 1;
  double inclination_deg = 55.0;
  double semi_major_axis_m = 26'560'000.0;
  double step_s = 30.0;
  double duration_s = 0.0;  // 0 -> one orbital period
  double elevation_mask_deg = 30.0;
  frames::GeodeticPoint receiver{31.24416, 121.50347, 0.0};
};

/// Orbital period of the circular orbit, seconds.
double orbital_period(double semi_major_axis_m);

/// Walker-delta constellation propagated on circular orbits with Earth rotation,
/// expressed in the receiver's ENU frame and filtered to elevation > mask.
std::vector<SatEpoch> synth_constellation(const ConstellationParams& params);

struct HistogramBin {
  double lo;
  double hi;
  std::size_t count;
};

/// Fixed-width bins on [lo, hi) plus open-ended underflow/overflow bins.
struct Histogram {
  std::vector<HistogramBin> bins;
  std::size_t total = 0;

  static Histogram build(std::span<const double> values, double lo, double hi, double width);
  double fraction(std::size_t bin) const;
};

struct HeightSweep {
  std::vector<double> heights;  // one per valid (satellite, epoch, wall)
  Histogram histogram;
  double band_lo = 10.0;
  double band_hi = 60.0;
  double band_fraction = 0.0;
};

/// Reflection heights for every visible sample against both walls, keeping physical
/// reflections with H > 0, binned at `bin_width` meters.
HeightSweep height_histogram(std::span<const SatEpoch> constellation, const CanyonConfig& cfg,
                             double band_lo = 10.0, double band_hi = 60.0,
                             double bin_width = 5.0);

struct TranslationMargin {
  std::optional<double> closed_form;  // verbatim two-term closed form
  double outward = 0.0;               // largest wall shift away from the street, >= 0
  double inward = 0.0;                // largest wall shift toward the street, <= 0
  double total() const { return outward - inward; }
};

struct TiltMargin {
  std::optional<double> closed_form;  // verbatim small-angle closed form, radians
  double toward = 0.0;                // largest lean toward the street, >= 0
  double away = 0.0;                  // largest lean away from the street, <= 0
  double total() const { return toward - away; }
};

inline constexpr double kTranslationTolerance = 1e-6;  // m
inline constexpr double kTiltTolerance = 1e-8;         // rad

/// Translation margin for reflection height H and tolerance l. The bisection oracle finds
/// the largest wall shift keeping the reflection height in [H - l, H + l].
TranslationMargin translation_margin(const Vec3& sat, const CanyonConfig& cfg, WallSide side,
                                     double height, double tolerance);

/// Tilt margin about the wall's base line (wall plane intersected with z = 0).
TiltMargin tilt_margin(const Vec3& sat, const CanyonConfig& cfg, WallSide side, double height,
                       double tolerance);

/// Height of the reflection point when the wall is shifted by `shift` meters (outward positive).
std::optional<double> shifted_wall_height(const Vec3& sat, const CanyonConfig& cfg, WallSide side,
                                          double shift);
/// Height of the reflection point when the wall leans by `angle` radians (toward the street positive).
std::optional<double> tilted_wall_height(const Vec3& sat, const CanyonConfig& cfg, WallSide side,
                                         double angle);

struct MarginSample {
  double epoch = 0.0;
  int prn = 0;
  WallSide side = WallSide::kPositive;
  Vec3 sat = Vec3::Zero();
  double height = 0.0;
  double tolerance = 0.0;
  TranslationMargin translation;
  TiltMargin tilt;
};

struct AgreementStats {
  std::size_t compared = 0;
  double mean_abs_difference = 0.0;
  double max_abs_difference = 0.0;
  std::size_t within_10_percent = 0;
};

struct MarginDistributions {
  std::vector<MarginSample> samples;
  Histogram translation;  // signed margins in meters, two per sample
  Histogram tilt;         // signed margins in degrees, two per sample
  double translation_band = 1.5;
  double tilt_band_deg = 5.0;
  double translation_fraction = 0.0;  // signed margins within +/- translation_band
  double tilt_fraction = 0.0;         // signed margins within +/- tilt_band_deg
  AgreementStats translation_agreement;
  AgreementStats tilt_agreement;  // restricted to |oracle| < 5 degrees
};

MarginDistributions margin_distributions(std::span<const SatEpoch> constellation,
                                         const CanyonConfig& cfg, double tolerance,
                                         unsigned workers = 1);

}  // namespace facetrace::margins
