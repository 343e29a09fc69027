// Copyright 2026 The wildcensus Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/// \file geometry.hpp
/// Nadir camera geometry on flat ground.
///
/// The camera looks straight down from `alt_agl` meters. At heading 0 the
/// image width runs west to east and the top image row points north (the
/// direction of travel). Headings rotate that frame clockwise. Ground
/// coordinates are local East-North meters about a geodetic origin, using an
/// equirectangular tangent plane that is adequate for survey blocks a few
/// kilometers across.

#pragma once

#include <array>
#include <cmath>
#include <iosfwd>
#include <map>
#include <numbers>
#include <string>

#include <Eigen/Core>

#include "wildcensus/error.hpp"

namespace wildcensus {

template <class Scalar>
using Vector2 = Eigen::Matrix<Scalar, 2, 1>;
template <class Scalar>
using Matrix2 = Eigen::Matrix<Scalar, 2, 2>;

using Point2 = Vector2<double>;

/// Latitude/longitude in decimal degrees (WGS84).
struct Geodetic {
  double lat_deg = 0.0;
  double lon_deg = 0.0;
};

template <class Scalar = double>
struct CameraIntrinsics {
  Scalar sensor_width_mm{};
  Scalar sensor_height_mm{};
  Scalar focal_length_mm{};
  int image_width_px = 0;
  int image_height_px = 0;
};

template <class Scalar = double>
struct FlightPose {
  Geodetic position;
  Scalar alt_agl_m{};
  Scalar heading_deg{};  ///< clockwise from true north, [0, 360)
  double timestamp_utc = 0.0;
};

template <class Scalar = double>
struct GroundFootprint {
  /// Front-left, front-right, back-right, back-left (image corners
  /// (0,0), (W,0), (W,H), (0,H)).
  std::array<Vector2<Scalar>, 4> corners;
  Vector2<Scalar> center;
  Scalar swath_across{};
  Scalar extent_along{};

  /// Shoelace area of the corner ring.
  Scalar area() const {
    Scalar twice = 0;
    for (std::size_t i = 0; i < 4; ++i) {
      const auto& a = corners[i];
      const auto& b = corners[(i + 1) % 4];
      twice += a.x() * b.y() - b.x() * a.y();
    }
    return std::abs(twice) / 2;
  }
};

using CameraIntrinsicsd = CameraIntrinsics<double>;
using FlightPosed = FlightPose<double>;
using GroundFootprintd = GroundFootprint<double>;

/// Named camera models, keyed by the manifest's camera_id.
using CameraRegistry = std::map<std::string, CameraIntrinsicsd>;

/// Meridional meters per degree on the reference sphere used by the
/// tangent-plane projection.
inline constexpr double kMetersPerDegree = 110574.0;

namespace detail {

template <class Scalar>
Scalar deg2rad(Scalar deg) {
  return deg * std::numbers::pi_v<Scalar> / Scalar(180);
}

}  // namespace detail

template <class Scalar>
void validate(const CameraIntrinsics<Scalar>& intr) {
  if (!(intr.sensor_width_mm > 0) || !(intr.sensor_height_mm > 0) || !(intr.focal_length_mm > 0) ||
      intr.image_width_px <= 0 || intr.image_height_px <= 0) {
    throw InvalidInput("camera intrinsics must be strictly positive");
  }
  const Scalar sensor_aspect = intr.sensor_width_mm / intr.sensor_height_mm;
  const Scalar pixel_aspect = Scalar(intr.image_width_px) / Scalar(intr.image_height_px);
  if (std::abs(sensor_aspect / pixel_aspect - Scalar(1)) > Scalar(0.01)) {
    throw InvalidInput("sensor aspect ratio does not match the pixel grid within 1%");
  }
}

template <class Scalar>
void validate(const FlightPose<Scalar>& pose) {
  if (!(pose.alt_agl_m > 0)) throw InvalidInput("altitude above ground must be positive");
  if (!(pose.heading_deg >= 0) || !(pose.heading_deg < 360)) {
    throw InvalidInput("heading must lie in [0, 360)");
  }
}

/// Diagonal field of view in degrees, for documentation against a vendor's
/// quoted FOV. Not used by any footprint formula.
template <class Scalar>
Scalar diagonal_fov_deg(const CameraIntrinsics<Scalar>& intr) {
  const Scalar diag = std::hypot(intr.sensor_width_mm, intr.sensor_height_mm);
  return Scalar(2) * std::atan(diag / (Scalar(2) * intr.focal_length_mm)) * Scalar(180) /
         std::numbers::pi_v<Scalar>;
}

/// Across-track ground width imaged from `alt_agl_m`.
template <class Scalar>
Scalar ground_swath(const CameraIntrinsics<Scalar>& intr, Scalar alt_agl_m) {
  validate(intr);
  if (!(alt_agl_m > 0)) throw InvalidInput("altitude above ground must be positive");
  return Scalar(2) * alt_agl_m * (intr.sensor_width_mm / (Scalar(2) * intr.focal_length_mm));
}

/// Along-track ground extent; the sensor-height analogue of ground_swath.
template <class Scalar>
Scalar along_track_extent(const CameraIntrinsics<Scalar>& intr, Scalar alt_agl_m) {
  validate(intr);
  if (!(alt_agl_m > 0)) throw InvalidInput("altitude above ground must be positive");
  return Scalar(2) * alt_agl_m * (intr.sensor_height_mm / (Scalar(2) * intr.focal_length_mm));
}

/// Ground distance covered by one pixel at nadir.
template <class Scalar>
Scalar ground_sample_distance(const CameraIntrinsics<Scalar>& intr, Scalar alt_agl_m) {
  return ground_swath(intr, alt_agl_m) / Scalar(intr.image_width_px);
}

/// Fraction of ground shared by consecutive frames taken `interval_s` apart.
template <class Scalar>
Scalar forward_overlap(Scalar speed_mps, Scalar interval_s, Scalar extent_along_m) {
  if (!(speed_mps >= 0)) throw InvalidInput("speed must be non-negative");
  if (!(interval_s > 0)) throw InvalidInput("photo interval must be positive");
  if (!(extent_along_m > 0)) throw InvalidInput("along-track extent must be positive");
  const Scalar advance = speed_mps * interval_s;
  return std::max(Scalar(0), (extent_along_m - advance) / extent_along_m);
}

/// Columns are the right-of-track and forward unit vectors in East-North.
template <class Scalar>
Matrix2<Scalar> heading_frame(Scalar heading_deg) {
  const Scalar h = detail::deg2rad(heading_deg);
  const Scalar s = std::sin(h);
  const Scalar c = std::cos(h);
  Matrix2<Scalar> frame;
  frame << c, s,
          -s, c;
  return frame;
}

/// Geodetic -> local East-North meters about `origin`.
inline Point2 enu_project(const Geodetic& origin, const Geodetic& point) {
  const double dlat = point.lat_deg - origin.lat_deg;
  const double dlon = point.lon_deg - origin.lon_deg;
  if (!(std::abs(dlat) < 1.0) || !(std::abs(dlon) < 1.0)) {
    throw InvalidInput("point lies more than 1 degree from the projection origin");
  }
  const double coslat = std::cos(detail::deg2rad(origin.lat_deg));
  return {dlon * coslat * kMetersPerDegree, dlat * kMetersPerDegree};
}

/// Inverse of enu_project.
inline Geodetic enu_unproject(const Geodetic& origin, const Point2& enu) {
  const double coslat = std::cos(detail::deg2rad(origin.lat_deg));
  const double dlat = enu.y() / kMetersPerDegree;
  const double dlon = enu.x() / (coslat * kMetersPerDegree);
  if (!(std::abs(dlat) < 1.0) || !(std::abs(dlon) < 1.0)) {
    throw InvalidInput("offset spans more than 1 degree from the projection origin");
  }
  return {origin.lat_deg + dlat, origin.lon_deg + dlon};
}

/// Ground rectangle seen by a nadir frame, in ENU meters about `origin`.
template <class Scalar>
GroundFootprint<Scalar> footprint_polygon(const FlightPose<Scalar>& pose,
                                          const CameraIntrinsics<Scalar>& intr,
                                          const Geodetic& origin) {
  validate(pose);
  GroundFootprint<Scalar> fp;
  fp.swath_across = ground_swath(intr, pose.alt_agl_m);
  fp.extent_along = along_track_extent(intr, pose.alt_agl_m);
  fp.center = enu_project(origin, pose.position).template cast<Scalar>();

  const Matrix2<Scalar> frame = heading_frame(pose.heading_deg);
  const Scalar hx = fp.swath_across / 2;
  const Scalar hy = fp.extent_along / 2;
  const std::array<Vector2<Scalar>, 4> local = {
      Vector2<Scalar>(-hx, hy), Vector2<Scalar>(hx, hy),
      Vector2<Scalar>(hx, -hy), Vector2<Scalar>(-hx, -hy)};
  for (std::size_t i = 0; i < 4; ++i) fp.corners[i] = fp.center + frame * local[i];
  return fp;
}

/// Ground point under a continuous pixel coordinate. Pixel (0,0) is the
/// top-left corner of the image and (W,H) the bottom-right; the principal
/// point is the image center.
template <class Scalar>
Vector2<Scalar> pixel_to_ground(const FlightPose<Scalar>& pose,
                                const CameraIntrinsics<Scalar>& intr,
                                const Vector2<Scalar>& pixel, const Geodetic& origin) {
  validate(pose);
  validate(intr);
  const Scalar w = Scalar(intr.image_width_px);
  const Scalar h = Scalar(intr.image_height_px);
  if (!(pixel.x() >= 0 && pixel.x() <= w && pixel.y() >= 0 && pixel.y() <= h)) {
    throw InvalidInput("pixel lies outside the image bounds");
  }
  const Scalar pitch_x = intr.sensor_width_mm / (w * intr.focal_length_mm);
  const Scalar pitch_y = intr.sensor_height_mm / (h * intr.focal_length_mm);
  // Image y grows downwards, i.e. backwards along track.
  const Vector2<Scalar> local(pose.alt_agl_m * (pixel.x() - w / 2) * pitch_x,
                              -pose.alt_agl_m * (pixel.y() - h / 2) * pitch_y);
  const Vector2<Scalar> nadir = enu_project(origin, pose.position).template cast<Scalar>();
  return nadir + heading_frame(pose.heading_deg) * local;
}

/// Inverse of pixel_to_ground. The result may fall outside the image; callers
/// test it against the bounds themselves.
template <class Scalar>
Vector2<Scalar> ground_to_pixel(const FlightPose<Scalar>& pose,
                                const CameraIntrinsics<Scalar>& intr,
                                const Vector2<Scalar>& ground, const Geodetic& origin) {
  validate(pose);
  validate(intr);
  const Scalar w = Scalar(intr.image_width_px);
  const Scalar h = Scalar(intr.image_height_px);
  const Vector2<Scalar> nadir = enu_project(origin, pose.position).template cast<Scalar>();
  // The heading frame is orthonormal, so its transpose is its inverse.
  const Vector2<Scalar> local = heading_frame(pose.heading_deg).transpose() * (ground - nadir);
  const Scalar pitch_x = intr.sensor_width_mm / (w * intr.focal_length_mm);
  const Scalar pitch_y = intr.sensor_height_mm / (h * intr.focal_length_mm);
  return {local.x() / (pose.alt_agl_m * pitch_x) + w / 2,
          -local.y() / (pose.alt_agl_m * pitch_y) + h / 2};
}

/// Parses the flat key-value camera file:
///
///     [phantom4pro]
///     sensor_width_mm = 13.2
///     ...
///
/// `#` and `;` start comments. Every section must define all five keys.
CameraRegistry parse_camera_config(std::istream& in);
CameraRegistry load_camera_config(const std::string& path);

/// Cameras known without a config file (currently the DJI Phantom 4 Pro,
/// from manufacturer specifications).
const CameraRegistry& default_cameras();

/// Looks up `camera_id`, throwing ValidationError when it is not registered.
const CameraIntrinsicsd& find_camera(const CameraRegistry& cameras, const std::string& camera_id);

}  // namespace wildcensus
