#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <numbers>
#include <random>

#include "occunav/geometry.hpp"
#include "occunav/io.hpp"

using namespace occunav;
namespace fs = std::filesystem;

namespace {

Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  return q.normalized().toRotationMatrix();
}

}  // namespace

TEST_CASE("intrinsics validation and back-projection") {
  CHECK_THROWS_AS(Intrinsics::make(-1, 1, 10, 10, 20, 20), std::invalid_argument);
  CHECK_THROWS_AS(Intrinsics::make(1, 1, 30, 10, 20, 20), std::invalid_argument);
  const auto k = Intrinsics::make(500, 480, 320, 240, 640, 480);
  const Vector3d oracle = k.matrix().inverse() * Vector3d(100, 50, 1);
  CHECK((k.backproject(100, 50) - oracle).norm() < 1e-15);
}

TEST_CASE("pixel_direction matches normalize(R K^-1 p)") {
  std::mt19937_64 rng(3);
  const auto k = Intrinsics::make(300, 310, 160, 120, 320, 240);
  Pose p;
  p.rotation = random_rotation(rng);
  p.translation = Vector3d(1, -2, 3);
  const Vector3d ray = p.rotation * k.matrix().inverse() * Vector3d(17.5, 200.5, 1);
  CHECK((pixel_direction(k, p, 17.5, 200.5) - ray.normalized()).norm() < 1e-14);
  const Vector3d literal = (ray + p.translation).normalized();
  CHECK((pixel_direction(k, p, 17.5, 200.5, true) - literal).norm() < 1e-14);
  CHECK_THROWS_AS(pixel_direction(k, p, 320.0, 10.0), std::out_of_range);
  CHECK_THROWS_AS(pixel_direction(k, p, -0.1, 10.0), std::out_of_range);
}

TEST_CASE("pixel centres cover the intrinsics image") {
  const auto k = Intrinsics::make(100, 100, 50, 40, 100, 80);
  const auto c = pixel_center(k, 8, 10, 0, 0);
  CHECK(c.x() == doctest::Approx(5.0));
  CHECK(c.y() == doctest::Approx(5.0));
  const auto last = pixel_center(k, 8, 10, 7, 9);
  CHECK(last.x() == doctest::Approx(95.0));
  CHECK(last.y() == doctest::Approx(75.0));
}

TEST_CASE("compose and invert are consistent") {
  std::mt19937_64 rng(5);
  Pose a{random_rotation(rng), Vector3d(1, 2, 3)};
  Pose b{random_rotation(rng), Vector3d(-4, 0.5, 2)};
  const Vector3d x(0.3, -0.7, 1.1);
  CHECK((compose(a, b).apply(x) - a.apply(b.apply(x))).norm() < 1e-12);
  const Pose id = compose(a, invert(a));
  CHECK((id.rotation - Matrix3d::Identity()).norm() < 1e-12);
  CHECK(id.translation.norm() < 1e-12);
}

TEST_CASE("default surround rig layout") {
  const CameraRig rig = default_surround_rig();
  REQUIRE(rig.size() == 6);
  CHECK(rig.reference().name == "front");
  for (const auto& cam : rig.cameras()) {
    CHECK(cam.pose.valid());
    CHECK(cam.pose.translation.z() == doctest::Approx(1.5));
  }
  // Optical axis of the front camera is ego +x; image right is ego -y, image down is ego -z.
  const Matrix3d r = rig.reference().pose.rotation;
  CHECK((r * Vector3d::UnitZ() - Vector3d::UnitX()).norm() < 1e-12);
  CHECK((r * Vector3d::UnitX() + Vector3d::UnitY()).norm() < 1e-12);
  CHECK((r * Vector3d::UnitY() + Vector3d::UnitZ()).norm() < 1e-12);
  // The back camera looks along -x.
  CHECK((rig[3].pose.rotation * Vector3d::UnitZ() + Vector3d::UnitX()).norm() < 1e-12);
}

TEST_CASE("rig construction rejects bad input") {
  const auto k = Intrinsics::make(10, 10, 5, 5, 10, 10);
  CHECK_THROWS(CameraRig({}, 0));
  CHECK_THROWS(CameraRig({{k, Pose{}, "a"}}, 1));
  CHECK_THROWS(CameraRig({{k, Pose{}, "a"}, {k, Pose{}, "a"}}, 0));
  Pose skew;
  skew.rotation(0, 1) = 0.5;
  CHECK_THROWS(CameraRig({{k, skew, "a"}}, 0));
}

TEST_CASE("ego pose and world cameras") {
  const EgoPose ego{0.0, 10.0, -2.0, std::numbers::pi / 2, 5.0, false};
  const Pose p = ego.to_pose();
  CHECK((p.apply(Vector3d(1, 0, 0)) - Vector3d(10, -1, 0)).norm() < 1e-12);
  const auto cams = rig_world_cameras(default_surround_rig(), ego);
  // Front camera mounted 1.5 m ahead of the ego origin ends up at (10, -0.5).
  CHECK(cams[0].second.translation.x() == doctest::Approx(10.0));
  CHECK(cams[0].second.translation.y() == doctest::Approx(-0.5));
}

TEST_CASE("trajectory validation") {
  CHECK_THROWS_AS(Trajectory(std::vector<EgoPose>{{0.0}, {0.0}}), std::invalid_argument);
  CHECK_THROWS_AS(Trajectory(std::vector<EgoPose>{{0.0, 0, 0, 0, -1.0}}), std::invalid_argument);
  const Trajectory t(std::vector<EgoPose>{{0.0}, {1.0 / 12}, {2.0 / 12}});
  CHECK(t.uniform());
  CHECK_FALSE(Trajectory(std::vector<EgoPose>{{0.0}, {0.1}, {0.3}}).uniform());
}

TEST_CASE("angle wrapping and resampling") {
  CHECK(wrap_angle(3 * std::numbers::pi) == doctest::Approx(std::numbers::pi));
  CHECK(wrap_angle(-std::numbers::pi) == doctest::Approx(std::numbers::pi));
  CHECK(wrap_angle(0.25) == doctest::Approx(0.25));

  const Trajectory t(std::vector<EgoPose>{{0.0, 0, 0, 3.0, 2.0}, {1.0, 4, 2, -3.0, 4.0}}, 2.0);
  const Trajectory r = resample(t, 4.0);
  REQUIRE(r.size() == 5);
  CHECK(r[2].x == doctest::Approx(2.0));
  CHECK(r[2].speed == doctest::Approx(3.0));
  // Shortest arc from 3 to -3 passes through pi.
  CHECK(std::abs(wrap_angle(r[2].yaw - std::numbers::pi)) < 1e-12);
  CHECK(r.uniform());
}

TEST_CASE("rig JSON round trip") {
  const CameraRig rig = default_surround_rig(32, 24);
  const CameraRig back = rig_from_json(nlohmann::json::parse(rig_to_json(rig).dump()));
  REQUIRE(back.size() == rig.size());
  for (std::size_t i = 0; i < rig.size(); ++i) {
    CHECK(back[i].intrinsics == rig[i].intrinsics);
    CHECK(back[i].pose.rotation == rig[i].pose.rotation);
    CHECK(back[i].pose.translation == rig[i].pose.translation);
    CHECK(back[i].name == rig[i].name);
  }
  CHECK_THROWS_AS(rig_from_json(nlohmann::json::parse(R"({"cameras": 3})")), DataError);
}

TEST_CASE("trajectory files round trip exactly") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-50, 50);
  std::vector<EgoPose> poses;
  for (int i = 0; i < 20; ++i) poses.push_back({i / 12.0 + 0.1, u(rng), u(rng), u(rng) / 20, std::abs(u(rng)), i % 3 == 0});
  const Trajectory t(poses);
  const auto dir = fs::temp_directory_path() / "occunav_test_geometry";
  fs::create_directories(dir);
  for (const auto* name : {"t.csv", "t.jsonl"}) {
    write_trajectory(t, dir / name);
    const Trajectory back = read_trajectory(dir / name);
    REQUIRE(back.size() == t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
      CHECK(back[i].t == t[i].t);
      CHECK(back[i].x == t[i].x);
      CHECK(back[i].yaw == t[i].yaw);
      CHECK(back[i].reverse == t[i].reverse);
    }
  }
  CHECK_THROWS_AS(read_trajectory(dir / "missing.csv"), DataError);
  write_text(dir / "bad.csv", "t,x,y,yaw,speed,reverse\n0,1,2\n");
  CHECK_THROWS_AS(read_trajectory(dir / "bad.csv"), DataError);
  fs::remove_all(dir);
}
