#include "facetrace/frames.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

namespace facetrace {

Cloud make_cloud(const std::vector<Vec3>& positions) {
  Cloud cloud;
  cloud.reserve(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    cloud.push_back({static_cast<PointIndex>(i), positions[i]});
  }
  return cloud;
}

namespace frames {

void validate(const GeodeticPoint& p) {
  if (!std::isfinite(p.latitude_deg) || !std::isfinite(p.longitude_deg) ||
      !std::isfinite(p.height_m)) {
    throw std::invalid_argument("geodetic point has non-finite component");
  }
  if (p.latitude_deg < -90.0 || p.latitude_deg > 90.0) {
    throw std::invalid_argument("latitude out of range [-90, 90]: " +
                                std::to_string(p.latitude_deg));
  }
  if (p.longitude_deg < -180.0 || p.longitude_deg > 180.0) {
    throw std::invalid_argument("longitude out of range [-180, 180]: " +
                                std::to_string(p.longitude_deg));
  }
}

Vec3 geodetic_to_ecef(const GeodeticPoint& p) {
  validate(p);
  const double lat = p.latitude_deg * kDegToRad;
  const double lon = p.longitude_deg * kDegToRad;
  const double sin_lat = std::sin(lat);
  const double cos_lat = std::cos(lat);
  const double prime_vertical = kSemiMajor / std::sqrt(1.0 - kEccentricitySq * sin_lat * sin_lat);
  return {(prime_vertical + p.height_m) * cos_lat * std::cos(lon),
          (prime_vertical + p.height_m) * cos_lat * std::sin(lon),
          (prime_vertical * (1.0 - kEccentricitySq) + p.height_m) * sin_lat};
}

GeodeticPoint ecef_to_geodetic(const Vec3& ecef) {
  if (!ecef.allFinite()) throw std::invalid_argument("ECEF point has non-finite component");
  const double x = ecef.x();
  const double y = ecef.y();
  const double z = ecef.z();
  const double rho = std::hypot(x, y);
  GeodeticPoint out;
  out.longitude_deg = std::atan2(y, x) * kRadToDeg;

  if (rho < 1e-9) {
    out.latitude_deg = z >= 0.0 ? 90.0 : -90.0;
    out.longitude_deg = 0.0;
    out.height_m = std::abs(z) - kSemiMinor;
    return out;
  }

  // Fixed-point iteration on latitude; converges quadratically-ish near the surface.
  double lat = std::atan2(z, rho * (1.0 - kEccentricitySq));
  double height = 0.0;
  for (int iter = 0; iter < 50; ++iter) {
    const double sin_lat = std::sin(lat);
    const double n = kSemiMajor / std::sqrt(1.0 - kEccentricitySq * sin_lat * sin_lat);
    height = rho / std::cos(lat) - n;
    const double next = std::atan2(z, rho * (1.0 - kEccentricitySq * n / (n + height)));
    const bool done = std::abs(next - lat) < 1e-15;
    lat = next;
    if (done) break;
  }
  // Final height from the better-conditioned projection.
  const double sin_lat = std::sin(lat);
  const double cos_lat = std::cos(lat);
  const double n = kSemiMajor / std::sqrt(1.0 - kEccentricitySq * sin_lat * sin_lat);
  height = rho * cos_lat + z * sin_lat - kSemiMajor * kSemiMajor / n;
  out.latitude_deg = lat * kRadToDeg;
  out.height_m = height;
  return out;
}

Mat3 ecef_to_enu_rotation(double latitude_deg, double longitude_deg) {
  const double lat = latitude_deg * kDegToRad;
  const double lon = longitude_deg * kDegToRad;
  const double sl = std::sin(lat), cl = std::cos(lat);
  const double so = std::sin(lon), co = std::cos(lon);
  Mat3 r;
  r << -so, co, 0.0,
       -sl * co, -sl * so, cl,
       cl * co, cl * so, sl;
  return r;
}

FrameOrigin::FrameOrigin() : FrameOrigin(GeodeticPoint{}) {}

FrameOrigin::FrameOrigin(const GeodeticPoint& anchor)
    : anchor_(anchor),
      rotation_(ecef_to_enu_rotation(anchor.latitude_deg, anchor.longitude_deg)),
      translation_(geodetic_to_ecef(anchor)) {}

Vec3 ecef_to_enu(const Vec3& ecef, const FrameOrigin& origin) {
  if (!ecef.allFinite()) throw std::invalid_argument("ECEF point has non-finite component");
  return origin.rotation() * (ecef - origin.translation());
}

Vec3 enu_to_ecef(const Vec3& enu, const FrameOrigin& origin) {
  if (!enu.allFinite()) throw std::invalid_argument("ENU point has non-finite component");
  return origin.rotation().transpose() * enu + origin.translation();
}

double elevation(const Vec3& enu) { return std::atan2(enu.z(), std::hypot(enu.x(), enu.y())); }

double azimuth(const Vec3& enu) {
  double az = std::atan2(enu.x(), enu.y());
  if (az < 0.0) az += 2.0 * kPi;
  return az;
}

GeodeticPoint parse_origin(std::string_view text) {
  std::string s(text);
  for (char& c : s) {
    if (c == ',') c = ' ';
  }
  std::istringstream in(s);
  GeodeticPoint p;
  if (!(in >> p.latitude_deg >> p.longitude_deg >> p.height_m)) {
    throw std::invalid_argument("origin must be \"lat,lon,height\": " + std::string(text));
  }
  std::string rest;
  if (in >> rest) throw std::invalid_argument("trailing text in origin: " + std::string(text));
  validate(p);
  return p;
}

}  // namespace frames
}  // namespace facetrace
