#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "facetrace/frames.hpp"
#include "facetrace/planar_map.hpp"
#include "facetrace/raytrace.hpp"

namespace facetrace {

/// Run-wide settings. Angles are degrees here and converted to radians only when
/// handed to library stages.
struct RunConfig {
  frames::GeodeticPoint origin{31.24416, 121.50347, 0.0};
  std::size_t k = 30;
  std::size_t min_slice_size = 200;
  double center_sigma = 1.0;
  double consistency_threshold = 2.5;
  double merge_angle_deg = 10.0;
  double band_lo = 10.0;
  double band_hi = 60.0;
  double street_width = 40.0;
  double elevation_mask_deg = 30.0;
  double tolerance_l = 1.0723;
  DelayPolicy policy = DelayPolicy::kMin;
  std::uint64_t seed = 1;
  unsigned workers = 1;

  /// Sets one key from text. Throws std::invalid_argument on unknown keys or bad values.
  void set(std::string_view key, std::string_view value);

  /// Throws std::invalid_argument naming the first out-of-range field.
  void validate() const;

  /// Flat `key = value` form, one per line, in a fixed order.
  std::string to_text() const;

  planar::BuildParams build_params() const;
};

/// Parses `key = value` lines; '#' starts a comment. The result is validated.
RunConfig parse_config(std::string_view text, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

}  // namespace facetrace
