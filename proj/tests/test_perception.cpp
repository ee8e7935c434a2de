#include <cmath>
#include <filesystem>
#include <numeric>

#include "doctest.h"
#include "hguide/error.hpp"
#include "hguide/perception.hpp"

using namespace hguide;

namespace {

// Camera at the world origin looking along +y (user forward).
Scene facing_forward(PointUCS target, PointUCS hand) {
  Scene s;
  s.objects.push_back({"cup", target});
  s.hand = hand;
  s.camera = {{0, 0, 0}, forward_camera_mount()};
  return s;
}

const Detection* find(const std::vector<Detection>& ds, std::string_view label) {
  for (const auto& d : ds)
    if (d.label == label) return &d;
  return nullptr;
}

}  // namespace

TEST_SUITE("perception") {
  TEST_CASE("object on the principal ray") {
    const CameraIntrinsics k{};
    const auto ds = observe(facing_forward({0, 1, 0}, {0.1, 0.8, -0.1}), k, {}, 1);
    const auto* cup = find(ds, "cup");
    REQUIRE(cup);
    CHECK(cup->u == doctest::Approx(k.cx).epsilon(1e-12));
    CHECK(cup->v == doctest::Approx(k.cy).epsilon(1e-12));
    CHECK(cup->depth == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ds.back().label == kHandLabel);
  }

  TEST_CASE("objects behind the camera or out of frame are dropped") {
    const CameraIntrinsics k{};
    Scene s = facing_forward({0, -1, 0}, {0, 0.5, 0});
    s.objects.push_back({"wide", {5, 1, 0}});
    const auto ds = observe(s, k, {}, 1);
    CHECK_FALSE(find(ds, "cup"));
    CHECK_FALSE(find(ds, "wide"));
    CHECK(find(ds, kHandLabel));
  }

  TEST_CASE("noise-free round trip on a hand-built scene") {
    const CameraIntrinsics k{};
    Scene s = generate_tabletop_scene(1);
    s.hand = {0.0, 0.4, 0.0};
    s.objects[0].position = {0.3, 0.6, 0.0};
    const auto ds = observe(s, k, {}, 1);
    const auto d = localize(ds, k, s.camera.orientation, s.objects[0].label);
    CHECK(std::abs(d.x() - 0.3) < 1e-6);
    CHECK(std::abs(d.y() - 0.2) < 1e-6);
  }

  TEST_CASE("noise-free round trip on generated tabletops") {
    const CameraIntrinsics k{};
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const Scene s = generate_tabletop_scene(seed);
      const auto ds = observe(s, k, {}, seed);
      REQUIRE(ds.size() == s.objects.size() + 1);
      for (const auto& o : s.objects) {
        const auto d = localize(ds, k, s.camera.orientation, o.label);
        CHECK(std::abs(d.x() - (o.position.x - s.hand.x)) < 1e-6);
        CHECK(std::abs(d.y() - (o.position.y - s.hand.y)) < 1e-6);
      }
    }
  }

  TEST_CASE("coincident hand and target") {
    const CameraIntrinsics k{};
    const auto ds = observe(facing_forward({0.1, 1, 0}, {0.1, 1, 0}), k, {}, 1);
    CHECK(localize(ds, k, forward_camera_mount(), "cup").d() < 1e-12);
  }

  TEST_CASE("swapping hand and target negates the displacement") {
    const CameraIntrinsics k{};
    const Quaternion q = forward_camera_mount();
    const auto a = localize(observe(facing_forward({0.2, 1.1, 0.1}, {-0.1, 0.7, 0}), k, {}, 1), k, q, "cup");
    const auto b = localize(observe(facing_forward({-0.1, 0.7, 0}, {0.2, 1.1, 0.1}), k, {}, 1), k, q, "cup");
    CHECK(a.x() == doctest::Approx(-b.x()).epsilon(1e-12));
    CHECK(a.y() == doctest::Approx(-b.y()).epsilon(1e-12));
  }

  TEST_CASE("missing detections") {
    const CameraIntrinsics k{};
    auto ds = observe(facing_forward({0, 1, 0}, {0, 0.8, 0}), k, {}, 1);
    try {
      localize(ds, k, forward_camera_mount(), "plate");
      FAIL("expected TargetNotDetected");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::TargetNotDetected);
    }
    ds.pop_back();
    try {
      localize(ds, k, forward_camera_mount(), "cup");
      FAIL("expected HandNotDetected");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::HandNotDetected);
    }
  }

  TEST_CASE("pixel noise has the configured spread") {
    const CameraIntrinsics k{};
    const Scene s = facing_forward({0, 1, 0}, {0, 0.8, 0});
    std::vector<double> us;
    for (std::uint64_t i = 0; i < 10000; ++i) {
      const auto ds = observe(s, k, {2.0, 0.0}, i);
      us.push_back(find(ds, "cup")->u);
    }
    const double mean = std::accumulate(us.begin(), us.end(), 0.0) / us.size();
    double ss = 0.0;
    for (double u : us) ss += (u - mean) * (u - mean);
    const double sd = std::sqrt(ss / (us.size() - 1));
    CHECK(std::abs(sd - 2.0) < 0.1);
  }

  TEST_CASE("localization error does not shrink when pixel noise doubles") {
    const CameraIntrinsics k{};
    auto rms = [&](double sigma) {
      double ss = 0.0;
      int n = 0;
      for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        const Scene s = generate_tabletop_scene(seed);
        const auto ds = observe(s, k, {sigma, 0.0}, seed + 7);
        try {
          const auto d = localize(ds, k, s.camera.orientation, s.objects[0].label);
          const double ex = d.x() - (s.objects[0].position.x - s.hand.x);
          const double ey = d.y() - (s.objects[0].position.y - s.hand.y);
          ss += ex * ex + ey * ey;
          ++n;
        } catch (const Error&) {
        }
      }
      return std::sqrt(ss / n);
    };
    const double e1 = rms(1.0);
    const double e2 = rms(2.0);
    CHECK(e1 > 0.0);
    CHECK(e2 >= e1);
  }

  TEST_CASE("synthetic detector draws fresh noise per frame and is reproducible") {
    const CameraIntrinsics k{};
    const Scene s = facing_forward({0, 1, 0}, {0, 0.8, 0});
    SyntheticDetector a(k, {1.0, 0.01}, 42), b(k, {1.0, 0.01}, 42);
    const auto f1 = a.detect(s);
    const auto f2 = a.detect(s);
    CHECK(f1[0].u != f2[0].u);
    CHECK(b.detect(s)[0].u == f1[0].u);
  }

  TEST_CASE("tabletop layout") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const Scene s = generate_tabletop_scene(seed);
      REQUIRE(s.objects.size() == 5);
      for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t j = i + 1; j < 5; ++j) {
          const double d = std::hypot(s.objects[i].position.x - s.objects[j].position.x,
                                      s.objects[i].position.y - s.objects[j].position.y);
          CHECK(d >= 0.05 - 1e-12);
          if (j == i + 1) CHECK(d <= 0.06 + 1e-12);
        }
      }
      CHECK_NOTHROW(s.validate());
    }
  }

  TEST_CASE("scene validation and json round trip") {
    Scene s = generate_tabletop_scene(3);
    const Scene back = scene_from_json_text(scene_to_json_text(s));
    REQUIRE(back.objects.size() == s.objects.size());
    for (std::size_t i = 0; i < s.objects.size(); ++i) {
      CHECK(back.objects[i].label == s.objects[i].label);
      CHECK(back.objects[i].position == s.objects[i].position);
    }
    CHECK(back.hand == s.hand);
    CHECK(back.camera.orientation == s.camera.orientation);

    s.objects[1].label = s.objects[0].label;
    CHECK_THROWS_AS(s.validate(), Error);
    s.objects[1].label = "hand";
    CHECK_THROWS_AS(s.validate(), Error);
    try {
      scene_from_json_text(R"({"scene":{"objects":[]}})");
      FAIL("expected MalformedScene");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MalformedScene);
    }
  }

  TEST_CASE("shipped scene files load and localize") {
    const CameraIntrinsics k{};
    int seen = 0;
    for (const auto& f : std::filesystem::directory_iterator(std::filesystem::path(HGUIDE_SOURCE_DIR) / "config/scenes")) {
      const Scene s = load_scene(f.path());
      const auto ds = observe(s, k, {}, 0);
      for (const auto& o : s.objects) {
        const auto d = localize(ds, k, s.camera.orientation, o.label);
        CHECK(std::abs(d.x() - (o.position.x - s.hand.x)) < 1e-6);
        CHECK(std::abs(d.y() - (o.position.y - s.hand.y)) < 1e-6);
      }
      ++seen;
    }
    CHECK(seen >= 1);
  }
}
