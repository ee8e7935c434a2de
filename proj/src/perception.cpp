#include "hguide/perception.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "json.hpp"

#include "hguide/error.hpp"
#include "hguide/rng.hpp"

namespace hguide {

using nlohmann::json;

void Scene::validate() const {
  std::set<std::string, std::less<>> seen;
  for (const auto& o : objects) {
    if (o.label.empty()) throw Error(ErrorCode::MalformedScene, "object label is empty");
    if (o.label == kHandLabel) throw Error(ErrorCode::MalformedScene, "label 'hand' is reserved");
    if (!seen.insert(o.label).second) throw Error(ErrorCode::MalformedScene, "duplicate label " + o.label);
    if (!o.position.finite()) throw Error(ErrorCode::MalformedScene, "non-finite position for " + o.label);
  }
  if (!hand.finite() || !camera.position.finite()) throw Error(ErrorCode::MalformedScene, "non-finite position");
  const double n = camera.orientation.norm();
  if (!(n > kZeroNormThreshold) || std::abs(n - 1.0) > kUnitNormTolerance) {
    throw Error(ErrorCode::MalformedScene, "camera orientation is not a unit quaternion");
  }
}

std::vector<Detection> observe(const Scene& scene, const CameraIntrinsics& k, const DetectorNoise& noise,
                               std::uint64_t seed) {
  k.validate();
  if (!(noise.sigma_px >= 0.0) || !(noise.sigma_depth >= 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "noise sigmas must be >= 0");
  }
  Rng rng(seed);
  std::vector<Detection> out;

  auto emit = [&](const std::string& label, const PointUCS& world) {
    const PointCCS p = user_to_camera(world - scene.camera.position, scene.camera.orientation);
    // Noise draws happen for every entity so one object's dropout does not
    // shift the noise seen by the others.
    const double nu = rng.normal();
    const double nv = rng.normal();
    const double nd = rng.normal();
    if (!(p.z > 0.0)) return;
    const PixelDepth px = project(p, k);
    if (!k.contains(px.u, px.v)) return;

    Detection det{label, px.u + noise.sigma_px * nu, px.v + noise.sigma_px * nv,
                  px.depth + noise.sigma_depth * nd, 1.0};
    if (!k.contains(det.u, det.v) || !(det.depth > 0.0)) return;
    out.push_back(std::move(det));
  };

  for (const auto& o : scene.objects) emit(o.label, o.position);
  emit(std::string(kHandLabel), scene.hand);
  return out;
}

std::vector<Detection> SyntheticDetector::detect(const Scene& scene) {
  return observe(scene, k_, noise_, derive_seed(seed_, frame_++));
}

namespace {

const Detection* find_best(const std::vector<Detection>& detections, std::string_view label) {
  const Detection* best = nullptr;
  for (const auto& d : detections) {
    if (d.label == label && (best == nullptr || d.confidence > best->confidence)) best = &d;
  }
  return best;
}

}  // namespace

PointUCS localize_offset(const std::vector<Detection>& detections, const CameraIntrinsics& k,
                         const Quaternion& q, std::string_view target_label) {
  const Detection* target = find_best(detections, target_label);
  if (target == nullptr) throw Error(ErrorCode::TargetNotDetected, std::string(target_label));
  const Detection* hand = find_best(detections, kHandLabel);
  if (hand == nullptr) throw Error(ErrorCode::HandNotDetected, "no hand in frame");

  // Both points share the camera origin, so the translation cancels.
  const PointUCS t = camera_to_user(deproject(target->u, target->v, target->depth, k), q);
  const PointUCS h = camera_to_user(deproject(hand->u, hand->v, hand->depth, k), q);
  return t - h;
}

DisplacementUCS localize(const std::vector<Detection>& detections, const CameraIntrinsics& k, const Quaternion& q,
                         std::string_view target_label) {
  const PointUCS off = localize_offset(detections, k, q, target_label);
  return {off.x, off.y};
}

Scene generate_tabletop_scene(std::uint64_t seed, const TabletopLayout& layout) {
  static const std::array<const char*, 5> kColors{"red", "green", "blue", "yellow", "white"};
  Rng rng(seed);

  auto on_table = [&](double x, double y) {
    return x >= layout.x_min && x <= layout.x_max && y >= layout.y_min && y <= layout.y_max;
  };

  Scene scene;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    scene.objects.clear();
    const double cx = rng.uniform(layout.x_min + layout.max_spacing, layout.x_max - layout.max_spacing);
    const double cy = rng.uniform(layout.y_min + layout.max_spacing, layout.y_max - layout.max_spacing);
    scene.objects.push_back({kColors[0], {cx, cy, layout.table_z}});

    bool ok = true;
    for (std::size_t i = 1; i < kColors.size() && ok; ++i) {
      ok = false;
      for (int tries = 0; tries < 200; ++tries) {
        const auto& prev = scene.objects.back().position;
        const double r = rng.uniform(layout.min_spacing, layout.max_spacing);
        const double a = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const PointUCS p{prev.x + r * std::cos(a), prev.y + r * std::sin(a), layout.table_z};
        if (!on_table(p.x, p.y)) continue;
        const bool clear = std::all_of(scene.objects.begin(), scene.objects.end(), [&](const SceneObject& o) {
          return std::hypot(o.position.x - p.x, o.position.y - p.y) >= layout.min_spacing;
        });
        if (!clear) continue;
        scene.objects.push_back({kColors[i], p});
        ok = true;
        break;
      }
    }
    if (ok) break;
  }
  if (scene.objects.size() != kColors.size()) {
    throw Error(ErrorCode::InvalidConfig, "tabletop too small for the requested spacing");
  }

  scene.hand = {rng.uniform(layout.x_min, layout.x_max), rng.uniform(layout.y_min, layout.y_max), layout.table_z};
  scene.camera.position = layout.camera_position;
  const Quaternion posture = Quaternion::from_axis_angle({1.0, 0.0, 0.0}, -layout.camera_pitch_down);
  scene.camera.orientation = effective_orientation(posture, forward_camera_mount());
  return scene;
}

namespace {

json point_json(const PointUCS& p) { return json::array({p.x, p.y, p.z}); }

PointUCS point_from(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) {
    throw Error(ErrorCode::MalformedScene, std::string(what) + " must be [x, y, z]");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

std::string scene_to_json_text(const Scene& scene) {
  json objects = json::array();
  for (const auto& o : scene.objects) objects.push_back({{"label", o.label}, {"position", point_json(o.position)}});
  const auto& q = scene.camera.orientation;
  json doc = {{"scene",
               {{"objects", objects},
                {"hand", point_json(scene.hand)},
                {"camera_pose",
                 {{"position", point_json(scene.camera.position)}, {"orientation", {q.w, q.x, q.y, q.z}}}}}}};
  return doc.dump(2) + "\n";
}

Scene scene_from_json_text(std::string_view text) {
  Scene scene;
  try {
    const json doc = json::parse(text);
    const json& s = doc.at("scene");
    for (const auto& o : s.at("objects")) {
      scene.objects.push_back({o.at("label").get<std::string>(), point_from(o.at("position"), "position")});
    }
    scene.hand = point_from(s.at("hand"), "hand");
    const json& pose = s.at("camera_pose");
    scene.camera.position = point_from(pose.at("position"), "camera_pose.position");
    const json& q = pose.at("orientation");
    if (!q.is_array() || q.size() != 4) throw Error(ErrorCode::MalformedScene, "orientation must be [w, x, y, z]");
    scene.camera.orientation = {q[0].get<double>(), q[1].get<double>(), q[2].get<double>(), q[3].get<double>()};
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedScene, e.what());
  }
  scene.validate();
  return scene;
}

Scene load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MalformedScene, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return scene_from_json_text(ss.str());
}

void save_scene(const Scene& scene, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::MalformedScene, "cannot write " + path.string());
  out << scene_to_json_text(scene);
}

}  // namespace hguide
