#include "hguide/geometry.hpp"

#include <numbers>
#include <string>

#include "hguide/error.hpp"

namespace hguide {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ZeroNormQuaternion: return "ZeroNormQuaternion";
    case ErrorCode::NonUnitQuaternion: return "NonUnitQuaternion";
    case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::PixelOutOfBounds: return "PixelOutOfBounds";
    case ErrorCode::BehindCamera: return "BehindCamera";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidPeriod: return "InvalidPeriod";
    case ErrorCode::TargetNotDetected: return "TargetNotDetected";
    case ErrorCode::HandNotDetected: return "HandNotDetected";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::DegenerateTrace: return "DegenerateTrace";
    case ErrorCode::NoActiveTrial: return "NoActiveTrial";
    case ErrorCode::TrialAlreadyActive: return "TrialAlreadyActive";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::MalformedScene: return "MalformedScene";
  }
  return "Unknown";
}

Quaternion Quaternion::normalized() const {
  const double n = norm();
  if (n <= kZeroNormThreshold) {
    throw Error(ErrorCode::ZeroNormQuaternion, "cannot normalize a zero quaternion");
  }
  return {w / n, x / n, y / n, z / n};
}

Quaternion Quaternion::from_axis_angle(const std::array<double, 3>& axis, double angle) {
  const double n = std::sqrt(axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]);
  if (n <= kZeroNormThreshold) {
    throw Error(ErrorCode::InvalidConfig, "rotation axis has zero length");
  }
  const double s = std::sin(angle / 2.0) / n;
  return {std::cos(angle / 2.0), axis[0] * s, axis[1] * s, axis[2] * s};
}

Quaternion operator*(const Quaternion& a, const Quaternion& b) {
  return {
      a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
      a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
      a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
      a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
  };
}

RotationMatrix RotationMatrix::transposed() const {
  RotationMatrix t;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) t(r, c) = (*this)(c, r);
  return t;
}

double RotationMatrix::determinant() const {
  const auto& a = *this;
  return a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
         a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
         a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
}

RotationMatrix operator*(const RotationMatrix& a, const RotationMatrix& b) {
  RotationMatrix out;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += a(r, k) * b(k, c);
      out(r, c) = s;
    }
  }
  return out;
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw Error(ErrorCode::InvalidConfig, "focal lengths must be positive");
  if (width <= 0 || height <= 0) throw Error(ErrorCode::InvalidConfig, "sensor size must be positive");
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
    throw Error(ErrorCode::InvalidConfig, "principal point outside the sensor");
  }
}

RotationMatrix quat_to_rotation(const Quaternion& q) {
  const double n = q.norm();
  if (!(n > kZeroNormThreshold)) {
    throw Error(ErrorCode::ZeroNormQuaternion, "quaternion norm is zero");
  }
  if (std::abs(n - 1.0) > kUnitNormTolerance) {
    throw Error(ErrorCode::NonUnitQuaternion, "quaternion norm " + std::to_string(n) + " is not close to 1");
  }
  const double q0 = q.w / n, q1 = q.x / n, q2 = q.y / n, q3 = q.z / n;

  RotationMatrix c;
  c.m = {
      q0 * q0 + q1 * q1 - q2 * q2 - q3 * q3, 2.0 * (q1 * q2 - q0 * q3),             2.0 * (q1 * q3 + q0 * q2),
      2.0 * (q1 * q2 + q0 * q3),             q0 * q0 - q1 * q1 + q2 * q2 - q3 * q3, 2.0 * (q2 * q3 - q0 * q1),
      2.0 * (q1 * q3 - q0 * q2),             2.0 * (q2 * q3 + q0 * q1),             q0 * q0 - q1 * q1 - q2 * q2 + q3 * q3,
  };
  return c;
}

namespace {

template <class To, class From>
To rotate(const RotationMatrix& r, const From& p) {
  return {
      r(0, 0) * p.x + r(0, 1) * p.y + r(0, 2) * p.z,
      r(1, 0) * p.x + r(1, 1) * p.y + r(1, 2) * p.z,
      r(2, 0) * p.x + r(2, 1) * p.y + r(2, 2) * p.z,
  };
}

}  // namespace

PointUCS camera_to_user(const PointCCS& p, const Quaternion& q) {
  return rotate<PointUCS>(quat_to_rotation(q), p);
}

PointCCS user_to_camera(const PointUCS& p, const Quaternion& q) {
  return rotate<PointCCS>(quat_to_rotation(q).transposed(), p);
}

Quaternion effective_orientation(const Quaternion& posture, const Quaternion& mount_calibration) {
  return posture * mount_calibration;
}

Quaternion forward_camera_mount() {
  // camera +z (optical axis) -> user +y, camera +y (image down) -> user -z
  return Quaternion::from_axis_angle({1.0, 0.0, 0.0}, -std::numbers::pi / 2.0);
}

PointCCS deproject(double u, double v, double depth, const CameraIntrinsics& k) {
  if (!(depth > 0.0)) throw Error(ErrorCode::NonPositiveDepth, "depth must be positive");
  if (!k.contains(u, v)) throw Error(ErrorCode::PixelOutOfBounds, "pixel lies outside the sensor");
  return {(u - k.cx) * depth / k.fx, (v - k.cy) * depth / k.fy, depth};
}

PixelDepth project(const PointCCS& p, const CameraIntrinsics& k) {
  if (!(p.z > 0.0)) throw Error(ErrorCode::BehindCamera, "point is not in front of the camera");
  return {k.fx * p.x / p.z + k.cx, k.fy * p.y / p.z + k.cy, p.z};
}

}  // namespace hguide
