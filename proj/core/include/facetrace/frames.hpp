#pragma once

#include <string_view>

#include "facetrace/types.hpp"

namespace facetrace::frames {

// WGS-84 ellipsoid.
inline constexpr double kSemiMajor = 6378137.0;
inline constexpr double kFlattening = 1.0 / 298.257223563;
inline constexpr double kSemiMinor = kSemiMajor * (1.0 - kFlattening);
inline constexpr double kEccentricitySq = kFlattening * (2.0 - kFlattening);

/// Geodetic coordinates: degrees, degrees, meters above the ellipsoid.
struct GeodeticPoint {
  double latitude_deg = 0.0;
  double longitude_deg = 0.0;
  double height_m = 0.0;
};

/// Throws std::invalid_argument when latitude/longitude are outside their ranges
/// or any component is non-finite.
void validate(const GeodeticPoint& p);

Vec3 geodetic_to_ecef(const GeodeticPoint& p);

/// Iterative inverse of geodetic_to_ecef. Converges to well below 1e-9 degrees.
GeodeticPoint ecef_to_geodetic(const Vec3& ecef);

/// Rotation taking ECEF difference vectors into local East-North-Up at the given geodetic point.
Mat3 ecef_to_enu_rotation(double latitude_deg, double longitude_deg);

/// Local ENU frame anchored at a geodetic point.
class FrameOrigin {
 public:
  FrameOrigin();  // anchored at (0, 0, 0)
  explicit FrameOrigin(const GeodeticPoint& anchor);

  const GeodeticPoint& anchor() const { return anchor_; }
  const Mat3& rotation() const { return rotation_; }        // e-frame -> enu-frame
  const Vec3& translation() const { return translation_; }  // anchor in e-frame

 private:
  GeodeticPoint anchor_;
  Mat3 rotation_;
  Vec3 translation_;
};

Vec3 ecef_to_enu(const Vec3& ecef, const FrameOrigin& origin);
Vec3 enu_to_ecef(const Vec3& enu, const FrameOrigin& origin);

/// Elevation of an ENU vector above the local horizon, radians.
double elevation(const Vec3& enu);
/// Azimuth clockwise from north, radians in [0, 2*pi).
double azimuth(const Vec3& enu);

/// Parses "lat,lon,height" (decimal degrees, meters).
GeodeticPoint parse_origin(std::string_view text);

}  // namespace facetrace::frames
