#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "hguide/encoding.hpp"
#include "hguide/geometry.hpp"

namespace hguide {

inline constexpr std::string_view kHandLabel = "hand";

struct SceneObject {
  std::string label;
  PointUCS position;  // world coordinates, user-frame axes
};

struct CameraPose {
  PointUCS position;
  Quaternion orientation;  // maps camera-frame vectors onto user-frame vectors
};

struct Scene {
  std::vector<SceneObject> objects;
  PointUCS hand;
  CameraPose camera;

  // Throws MalformedScene on duplicate or reserved labels and non-finite values.
  void validate() const;
};

struct Detection {
  std::string label;
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;
  double confidence = 1.0;
};

struct DetectorNoise {
  double sigma_px = 0.0;
  double sigma_depth = 0.0;
};

// Abstract detector so the synthetic backend can be swapped for a real one.
class Detector {
 public:
  virtual ~Detector() = default;
  virtual std::vector<Detection> detect(const Scene& scene) = 0;
};

// Pinhole projection with seeded Gaussian pixel/depth noise. Objects behind
// the camera or outside the sensor (before or after noise) are dropped.
std::vector<Detection> observe(const Scene& scene, const CameraIntrinsics& k, const DetectorNoise& noise,
                               std::uint64_t seed);

class SyntheticDetector final : public Detector {
 public:
  SyntheticDetector(CameraIntrinsics k, DetectorNoise noise, std::uint64_t seed)
      : k_(k), noise_(noise), seed_(seed) {}

  // Each call uses a fresh sub-seed so consecutive frames are independent.
  std::vector<Detection> detect(const Scene& scene) override;

 private:
  CameraIntrinsics k_;
  DetectorNoise noise_;
  std::uint64_t seed_;
  std::uint64_t frame_ = 0;
};

// Full 3-D hand->target offset in the user frame (z kept for logging).
PointUCS localize_offset(const std::vector<Detection>& detections, const CameraIntrinsics& k,
                         const Quaternion& q, std::string_view target_label);

DisplacementUCS localize(const std::vector<Detection>& detections, const CameraIntrinsics& k,
                         const Quaternion& q, std::string_view target_label);

struct TabletopLayout {
  double x_min = -0.3, x_max = 0.3;  // 0.6 m wide
  double y_min = 0.25, y_max = 0.65; // 0.4 m deep
  double table_z = 0.0;
  double min_spacing = 0.05;
  double max_spacing = 0.06;
  PointUCS camera_position{0.0, 0.0, 0.55};
  double camera_pitch_down = 0.96;  // rad
};

// Five colored blocks, each placed 5-6 cm from the previously placed block
// and at least 5 cm from all others, plus a hand somewhere on the table.
Scene generate_tabletop_scene(std::uint64_t seed, const TabletopLayout& layout = {});

Scene load_scene(const std::filesystem::path& path);
void save_scene(const Scene& scene, const std::filesystem::path& path);
Scene scene_from_json_text(std::string_view text);
std::string scene_to_json_text(const Scene& scene);

}  // namespace hguide
