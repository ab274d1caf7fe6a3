#include <gtest/gtest.h>

#include "facetrace/config.hpp"

using namespace facetrace;

TEST(Config, Defaults) {
  const RunConfig c;
  EXPECT_EQ(c.k, 30u);
  EXPECT_EQ(c.min_slice_size, 200u);
  EXPECT_DOUBLE_EQ(c.merge_angle_deg, 10.0);
  EXPECT_DOUBLE_EQ(c.band_lo, 10.0);
  EXPECT_DOUBLE_EQ(c.band_hi, 60.0);
  EXPECT_DOUBLE_EQ(c.street_width, 40.0);
  EXPECT_DOUBLE_EQ(c.elevation_mask_deg, 30.0);
  EXPECT_DOUBLE_EQ(c.tolerance_l, 1.0723);
  EXPECT_EQ(c.policy, DelayPolicy::kMin);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, ParsesKeyValueWithComments) {
  const auto c = parse_config(
      "# site\nk = 20\nmin_slice_size=50  # small scans\n\norigin = 22.3, 114.2, 5\npolicy = max\nworkers = 4\n");
  EXPECT_EQ(c.k, 20u);
  EXPECT_EQ(c.min_slice_size, 50u);
  EXPECT_DOUBLE_EQ(c.origin.latitude_deg, 22.3);
  EXPECT_DOUBLE_EQ(c.origin.height_m, 5.0);
  EXPECT_EQ(c.policy, DelayPolicy::kMax);
  EXPECT_EQ(c.workers, 4u);
}

TEST(Config, LaterSourcesOverrideBase) {
  RunConfig base;
  base.street_width = 30.0;
  const auto c = parse_config("k = 12\n", base);
  EXPECT_DOUBLE_EQ(c.street_width, 30.0);
  EXPECT_EQ(c.k, 12u);
}

TEST(Config, TextRoundTrip) {
  RunConfig c;
  c.set("merge_angle_deg", "7.5");
  c.set("seed", "42");
  const auto back = parse_config(c.to_text());
  EXPECT_EQ(back.to_text(), c.to_text());
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  RunConfig c;
  EXPECT_THROW(c.set("neighbours", "3"), std::invalid_argument);
  EXPECT_THROW(c.set("k", "ten"), std::invalid_argument);
  EXPECT_THROW(c.set("street_width", "inf"), std::invalid_argument);
  EXPECT_THROW(c.set("policy", "median"), std::invalid_argument);
  try {
    parse_config("k = 30\nbogus = 1\n");
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  EXPECT_THROW(parse_config("k 30\n"), std::invalid_argument);
}

TEST(Config, ValidationRanges) {
  EXPECT_THROW(parse_config("band_lo = 70\n"), std::invalid_argument);
  EXPECT_THROW(parse_config("merge_angle_deg = 95\n"), std::invalid_argument);
  EXPECT_THROW(parse_config("elevation_mask_deg = 90\n"), std::invalid_argument);
  EXPECT_THROW(parse_config("workers = 0\n"), std::invalid_argument);
  EXPECT_THROW(parse_config("origin = 100,0,0\n"), std::invalid_argument);
}

TEST(Config, BuildParamsConvertsDegrees) {
  RunConfig c;
  c.merge_angle_deg = 18.0;
  c.k = 16;
  const auto p = c.build_params();
  EXPECT_NEAR(p.merge_angle_rad, kPi / 10.0, 1e-15);
  EXPECT_EQ(p.segmentation.k, 16u);
  EXPECT_EQ(p.segmentation.min_slice_size, 200u);
}
