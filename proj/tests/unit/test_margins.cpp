#include <gtest/gtest.h>

#include <Eigen/Geometry>
#include <cmath>
#include <map>

#include "facetrace/frames.hpp"
#include "facetrace/margins.hpp"
#include "test_support.hpp"

using namespace facetrace;
using namespace facetrace::margins;

namespace {

// Line S -> R' intersected with the wall plane, independently of the closed form.
double line_oracle_height(const Vec3& sat, const CanyonConfig& cfg, WallSide side) {
  using Vec3l = Eigen::Matrix<long double, 3, 1>;
  const long double w = side == WallSide::kPositive ? 0.5L * cfg.street_width : -0.5L * cfg.street_width;
  const Vec3l r = cfg.receiver.cast<long double>();
  const Vec3l mirror(2 * w - r.x(), r.y(), r.z());
  const Eigen::ParametrizedLine<long double, 3> line = Eigen::ParametrizedLine<long double, 3>::Through(mirror, sat.cast<long double>());
  const Eigen::Hyperplane<long double, 3> wall(Vec3l::UnitX(), -w);
  return static_cast<double>(line.intersectionPoint(wall).z());
}

CanyonConfig centered(double width = 40.0) { return {width, Vec3(0, 0, 1.5)}; }

Vec3 sky(double az_deg, double el_deg, const Vec3& r = Vec3(0, 0, 1.5)) {
  const double az = az_deg * kDegToRad, el = el_deg * kDegToRad;
  return r + 2.02e7 * Vec3(std::cos(el) * std::sin(az), std::cos(el) * std::cos(az), std::sin(el));
}

}  // namespace

TEST(Height, HandCheckedExample) {
  const CanyonConfig cfg{40.0, Vec3::Zero()};
  const auto h = reflection_height({-20, 0, 40}, cfg, WallSide::kPositive);
  ASSERT_TRUE(h.has_value());
  EXPECT_NEAR(*h, 40.0 / 3.0, 1e-12);
  EXPECT_TRUE(reflection_is_physical({-20, 0, 40}, cfg, WallSide::kPositive));
}

TEST(Height, HorizontalRayKeepsSatelliteHeight) {
  const CanyonConfig cfg{40.0, Vec3(0, 0, 7)};
  const auto h = reflection_height({-30, 5, 7}, cfg, WallSide::kPositive);
  ASSERT_TRUE(h.has_value());
  EXPECT_NEAR(*h, 7.0, 1e-12);
}

TEST(Height, DegenerateDenominatorIsEmpty) {
  const CanyonConfig cfg{40.0, Vec3::Zero()};
  EXPECT_FALSE(reflection_height({40, 0, 10}, cfg, WallSide::kPositive).has_value());
}

TEST(Height, MatchesParametricLineOracle) {
  test_support::Rng rng(51);
  int physical = 0;
  for (int i = 0; i < 10000; ++i) {
    const double width = rng.uniform(10, 60);
    const CanyonConfig cfg{width, Vec3(rng.uniform(-0.45, 0.45) * width, rng.uniform(-50, 50), rng.uniform(0, 3))};
    const auto side = i % 2 ? WallSide::kPositive : WallSide::kNegative;
    const Vec3 sat = i % 4 < 2 ? sky(rng.uniform(0, 360), rng.uniform(5, 89), cfg.receiver)
                               : Vec3(rng.uniform(-500, 500), rng.uniform(-500, 500), rng.uniform(0, 500));
    const auto h = reflection_height(sat, cfg, side);
    if (!h) continue;
    const double oracle = line_oracle_height(sat, cfg, side);
    if (reflection_is_physical(sat, cfg, side)) {
      ++physical;
      EXPECT_NEAR(*h, oracle, 1e-9) << "case " << i;
    } else {
      // Off-wall extrapolations can put H hundreds of kilometers up; compare relatively.
      EXPECT_NEAR(*h, oracle, 1e-13 * std::max(1.0, std::abs(oracle))) << "case " << i;
    }
  }
  EXPECT_GT(physical, 2000);
}

TEST(Height, NegativeWallIsTheMirrorImage) {
  const CanyonConfig cfg{40.0, Vec3(2, 0, 1.5)};
  const Vec3 s(30, 10, 200);
  const CanyonConfig mirrored{40.0, Vec3(-2, 0, 1.5)};
  EXPECT_DOUBLE_EQ(*reflection_height(s, cfg, WallSide::kNegative),
                   *reflection_height(Vec3(-30, 10, 200), mirrored, WallSide::kPositive));
}

TEST(Constellation, MaskNinetyIsEmpty) {
  ConstellationParams p;
  p.elevation_mask_deg = 90.0;
  p.step_s = 300.0;
  EXPECT_TRUE(synth_constellation(p).empty());
}

TEST(Constellation, MaskZeroKeepsAtMostAllSatellites) {
  ConstellationParams p;
  p.elevation_mask_deg = 0.0;
  p.step_s = 600.0;
  const auto sats = synth_constellation(p);
  ASSERT_FALSE(sats.empty());
  std::map<double, int> per_epoch;
  for (const auto& s : sats) ++per_epoch[s.epoch];
  for (const auto& [epoch, count] : per_epoch) {
    EXPECT_LE(count, 24);
    EXPECT_GE(count, 4);
  }
}

TEST(Constellation, ElevationMatchesUpVectorOracle) {
  ConstellationParams p;
  p.step_s = 120.0;
  const auto sats = synth_constellation(p);
  ASSERT_FALSE(sats.empty());
  const frames::FrameOrigin origin(p.receiver);
  const double lat = p.receiver.latitude_deg * kDegToRad, lon = p.receiver.longitude_deg * kDegToRad;
  const Vec3 up(std::cos(lat) * std::cos(lon), std::cos(lat) * std::sin(lon), std::sin(lat));
  const Vec3 rx = frames::geodetic_to_ecef(p.receiver);
  for (const auto& s : sats) {
    const Vec3 los = (frames::enu_to_ecef(s.position, origin) - rx).normalized();
    const double oracle = std::asin(up.dot(los));
    EXPECT_NEAR(frames::elevation(s.position), oracle, 1e-9);
    EXPECT_GT(oracle, 30.0 * kDegToRad - 1e-9);
  }
}

TEST(Constellation, RangeIsOrbitalGeometry) {
  EXPECT_NEAR(orbital_period(26'560'000.0), 43'077.0, 5.0);
  ConstellationParams bad;
  bad.satellites = 25;
  EXPECT_THROW(synth_constellation(bad), std::invalid_argument);
}

TEST(HeightSweep, ConstructedBandGivesFractionOne) {
  const CanyonConfig cfg{40.0, Vec3::Zero()};
  std::vector<SatEpoch> family;
  for (int i = 0; i < 50; ++i) family.push_back({double(i), 1, Vec3(-20, i, 31.0 + 2.9 * i)});
  const auto sweep = height_histogram(family, cfg);
  EXPECT_EQ(sweep.heights.size(), 50u);
  EXPECT_DOUBLE_EQ(sweep.band_fraction, 1.0);
}

TEST(HeightSweep, HistogramConservesSamples) {
  ConstellationParams p;
  p.step_s = 60.0;
  const auto sweep = height_histogram(synth_constellation(p), centered());
  ASSERT_FALSE(sweep.heights.empty());
  std::size_t total = 0;
  double fraction = 0.0;
  for (std::size_t b = 0; b < sweep.histogram.bins.size(); ++b) {
    total += sweep.histogram.bins[b].count;
    fraction += sweep.histogram.fraction(b);
    EXPECT_GE(sweep.histogram.fraction(b), 0.0);
  }
  EXPECT_EQ(total, sweep.heights.size());
  EXPECT_EQ(sweep.histogram.total, sweep.heights.size());
  EXPECT_NEAR(fraction, 1.0, 1e-12);
  EXPECT_GE(sweep.band_fraction, 0.0);
  EXPECT_LE(sweep.band_fraction, 1.0);
}

TEST(HistogramBins, EdgesAndOpenEnds) {
  const std::vector<double> v{-1.0, 0.0, 4.99, 5.0, 10.0, 100.0};
  const auto h = Histogram::build(v, 0.0, 10.0, 5.0);
  ASSERT_EQ(h.bins.size(), 4u);
  EXPECT_EQ(h.bins[0].count, 1u);
  EXPECT_EQ(h.bins[1].count, 2u);
  EXPECT_EQ(h.bins[2].count, 1u);
  EXPECT_EQ(h.bins[3].count, 2u);
  EXPECT_THROW(Histogram::build(v, 0.0, 10.0, 0.0), std::invalid_argument);
}

TEST(Translation, ZeroToleranceGivesZeroMargin) {
  const auto cfg = centered();
  const Vec3 s = sky(270, 45);
  const double h = *reflection_height(s, cfg, WallSide::kPositive);
  const auto m = translation_margin(s, cfg, WallSide::kPositive, h, 0.0);
  EXPECT_LE(m.outward, kTranslationTolerance);
  EXPECT_GE(m.inward, -kTranslationTolerance);
}

TEST(Translation, OracleKeepsHeightWithinTolerance) {
  const auto cfg = centered();
  const Vec3 s = sky(260, 50);
  const double h = *reflection_height(s, cfg, WallSide::kPositive);
  const double l = 1.0723;
  const auto m = translation_margin(s, cfg, WallSide::kPositive, h, l);
  EXPECT_GT(m.outward, 0.0);
  EXPECT_LT(m.inward, 0.0);
  for (double shift : {m.outward, m.inward, 0.5 * m.outward, 0.5 * m.inward}) {
    const auto moved = shifted_wall_height(s, cfg, WallSide::kPositive, shift);
    ASSERT_TRUE(moved.has_value());
    EXPECT_LE(std::abs(*moved - h), l + 1e-9);
  }
  const auto beyond = shifted_wall_height(s, cfg, WallSide::kPositive, m.outward + 1e-3);
  EXPECT_TRUE(!beyond || std::abs(*beyond - h) > l);
}

TEST(Tilt, ZeroToleranceGivesZeroMargin) {
  const auto cfg = centered();
  const Vec3 s = sky(280, 40);
  const double h = *reflection_height(s, cfg, WallSide::kPositive);
  const auto m = tilt_margin(s, cfg, WallSide::kPositive, h, 0.0);
  EXPECT_LE(m.toward, kTiltTolerance);
  EXPECT_GE(m.away, -kTiltTolerance);
}

TEST(Tilt, UprightWallReproducesHeight) {
  const auto cfg = centered();
  const Vec3 s = sky(250, 35);
  for (auto side : {WallSide::kPositive, WallSide::kNegative}) {
    const auto flat = reflection_height(s, cfg, side);
    const auto tilted = tilted_wall_height(s, cfg, side, 0.0);
    ASSERT_EQ(flat.has_value() && reflection_is_physical(s, cfg, side), tilted.has_value());
    if (tilted) EXPECT_NEAR(*tilted, *flat, 1e-9);
  }
}

TEST(Margins, MonotoneInTolerance) {
  const auto cfg = centered();
  test_support::Rng rng(52);
  for (int i = 0; i < 100; ++i) {
    const Vec3 s = sky(rng.uniform(200, 340), rng.uniform(30, 85));
    const auto h = reflection_height(s, cfg, WallSide::kPositive);
    if (!h || !reflection_is_physical(s, cfg, WallSide::kPositive) || *h <= 0) continue;
    const double l = rng.uniform(0.2, 2.0);
    const auto t1 = translation_margin(s, cfg, WallSide::kPositive, *h, l);
    const auto t2 = translation_margin(s, cfg, WallSide::kPositive, *h, 2 * l);
    EXPECT_GE(t2.outward, t1.outward - 2 * kTranslationTolerance);
    EXPECT_LE(t2.inward, t1.inward + 2 * kTranslationTolerance);
    const auto a1 = tilt_margin(s, cfg, WallSide::kPositive, *h, l);
    const auto a2 = tilt_margin(s, cfg, WallSide::kPositive, *h, 2 * l);
    EXPECT_GE(a2.toward, a1.toward - 2 * kTiltTolerance);
    EXPECT_LE(a2.away, a1.away + 2 * kTiltTolerance);
  }
}

TEST(Margins, IndependentOfAlongStreetPosition) {
  const Vec3 s = sky(265, 55);
  const auto cfg = centered();
  CanyonConfig shifted = cfg;
  shifted.receiver.y() += 137.0;
  const Vec3 s2 = s + Vec3(0, 137.0, 0);
  const double h = *reflection_height(s, cfg, WallSide::kPositive);
  EXPECT_DOUBLE_EQ(h, *reflection_height(s2, shifted, WallSide::kPositive));
  const auto t1 = translation_margin(s, cfg, WallSide::kPositive, h, 1.0723);
  const auto t2 = translation_margin(s2, shifted, WallSide::kPositive, h, 1.0723);
  EXPECT_EQ(t1.outward, t2.outward);
  EXPECT_EQ(t1.inward, t2.inward);
  EXPECT_EQ(t1.closed_form, t2.closed_form);
  const auto a1 = tilt_margin(s, cfg, WallSide::kPositive, h, 1.0723);
  const auto a2 = tilt_margin(s2, shifted, WallSide::kPositive, h, 1.0723);
  EXPECT_EQ(a1.toward, a2.toward);
  EXPECT_EQ(a1.closed_form, a2.closed_form);
}

TEST(Margins, DistributionsCountEverySample) {
  ConstellationParams p;
  p.step_s = 600.0;
  const auto sats = synth_constellation(p);
  const auto d = margin_distributions(sats, centered(), 1.0723, 2);
  ASSERT_FALSE(d.samples.empty());
  EXPECT_EQ(d.translation.total, 2 * d.samples.size());
  EXPECT_EQ(d.tilt.total, 2 * d.samples.size());
  EXPECT_GE(d.translation_fraction, 0.0);
  EXPECT_LE(d.translation_fraction, 1.0);
  EXPECT_THROW(margin_distributions(sats, centered(), 0.0), std::invalid_argument);
}
