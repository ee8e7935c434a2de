#pragma once

#include <array>
#include <cmath>

namespace hguide {

// Q = w + x i + y j + z k. Serialized everywhere in (w, x, y, z) order.
struct Quaternion {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
  Quaternion conjugate() const { return {w, -x, -y, -z}; }
  Quaternion normalized() const;

  // Rotation by `angle` radians about a unit `axis`.
  static Quaternion from_axis_angle(const std::array<double, 3>& axis, double angle);

  friend bool operator==(const Quaternion&, const Quaternion&) = default;
};

// Hamilton product a*b; as rotations, b is applied first.
Quaternion operator*(const Quaternion& a, const Quaternion& b);

// Deviation allowed before quat_to_rotation refuses an input instead of
// renormalizing it.
inline constexpr double kUnitNormTolerance = 1e-2;
inline constexpr double kZeroNormThreshold = 1e-12;

struct RotationMatrix {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};  // row-major

  double operator()(int row, int col) const { return m[static_cast<std::size_t>(row * 3 + col)]; }
  double& operator()(int row, int col) { return m[static_cast<std::size_t>(row * 3 + col)]; }

  RotationMatrix transposed() const;
  double determinant() const;
};

RotationMatrix operator*(const RotationMatrix& a, const RotationMatrix& b);

struct CameraFrame {};
struct UserFrame {};

// A point tagged with the frame it is expressed in. Points from different
// frames do not mix: there is no arithmetic between Point3<CameraFrame> and
// Point3<UserFrame>.
template <class Frame>
struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }

  friend Point3 operator+(const Point3& a, const Point3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Point3 operator-(const Point3& a, const Point3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend bool operator==(const Point3&, const Point3&) = default;
};

using PointCCS = Point3<CameraFrame>;
using PointUCS = Point3<UserFrame>;

struct CameraIntrinsics {
  double fx = 380.0;
  double fy = 380.0;
  double cx = 320.0;
  double cy = 240.0;
  int width = 640;
  int height = 480;

  // Throws InvalidConfig.
  void validate() const;
  bool contains(double u, double v) const { return u >= 0.0 && v >= 0.0 && u < width && v < height; }
};

struct PixelDepth {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;
};

// Direction-cosine matrix of a (near-)unit quaternion. Inputs within
// kUnitNormTolerance of unit norm are normalized first; others throw
// NonUnitQuaternion, and norm <= kZeroNormThreshold throws ZeroNormQuaternion.
RotationMatrix quat_to_rotation(const Quaternion& q);

// Rotates a camera-frame point into the user frame: q maps camera-frame
// vectors onto user-frame vectors.
PointUCS camera_to_user(const PointCCS& p, const Quaternion& q);
PointCCS user_to_camera(const PointUCS& p, const Quaternion& q);

// Orientation used for the camera->user transform: the fixed mount
// calibration is applied to camera vectors first, then the posture-sensor
// rotation.
Quaternion effective_orientation(const Quaternion& posture, const Quaternion& mount_calibration);

// Mount calibration for a pinhole camera (x right, y down, z forward) looking
// straight ahead in a user frame with x right, y forward, z up.
Quaternion forward_camera_mount();

PointCCS deproject(double u, double v, double depth, const CameraIntrinsics& k);
PixelDepth project(const PointCCS& p, const CameraIntrinsics& k);

}  // namespace hguide
