#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>
#include <vector>

namespace facetrace {

/// Cartesian position in meters. The frame (ECEF or local ENU) is carried by context.
using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;
using Mat3 = Eigen::Matrix3d;

using PointIndex = std::uint32_t;
using IndexList = std::vector<PointIndex>;

/// Raw 3D sample. Ids are dense and equal to the position in the owning cloud.
struct CloudPoint {
  PointIndex id = 0;
  Vec3 position = Vec3::Zero();
};

using Cloud = std::vector<CloudPoint>;

/// Builds a cloud with dense ids from bare positions.
Cloud make_cloud(const std::vector<Vec3>& positions);

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kDegToRad = kPi / 180.0;
inline constexpr double kRadToDeg = 180.0 / kPi;

}  // namespace facetrace
