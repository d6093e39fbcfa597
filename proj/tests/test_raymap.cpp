#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <numbers>
#include <random>

#include "occunav/io.hpp"
#include "occunav/raymap.hpp"

using namespace occunav;
namespace fs = std::filesystem;

namespace {

Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  return Eigen::Quaterniond(n(rng), n(rng), n(rng), n(rng)).normalized().toRotationMatrix();
}

Trajectory wiggly_trajectory(std::size_t n) {
  std::vector<EgoPose> poses;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = double(i) / 12.0;
    poses.push_back({t, 8 * t, 0.5 * std::sin(t), 0.3 * std::sin(2 * t), 8.0, false});
  }
  return Trajectory(poses);
}

}  // namespace

TEST_CASE("plucker_embed hand-computed moments") {
  const auto k = Intrinsics::make(100, 100, 50, 50, 100, 100);
  // Principal-point ray at identity rotation is +z.
  const auto at_origin = plucker_embed(k, Pose{}, 50.0, 50.0);
  CHECK(at_origin.moment.norm() == 0.0);
  CHECK((at_origin.direction - Vector3d::UnitZ()).norm() < 1e-15);
  CHECK(plucker_embed(k, Pose::translate(0, 0, 1), 50.0, 50.0).moment.norm() == 0.0);
  const auto shifted = plucker_embed(k, Pose::translate(1, 0, 0), 50.0, 50.0);
  CHECK((shifted.moment - Vector3d(0, -1, 0)).norm() < 1e-15);
  CHECK_THROWS_AS(plucker_embed(k, Pose{}, 100.0, 0.0), std::out_of_range);
}

TEST_CASE("view_raymap samples pixel centres") {
  const auto k = Intrinsics::make(80, 80, 40, 30, 80, 60);
  const RayMap one = view_raymap(k, Pose{}, 1, 1);
  REQUIRE(one.n_pixels() == 1);
  // The single sample sits at the image centre (40, 30), the principal point.
  CHECK((one.ray(0, 0, 0, 0).tail<3>() - Vector3d::UnitZ()).norm() < 1e-15);

  const RayMap grid = view_raymap(k, Pose{}, 6, 8);
  CHECK(grid.pixels().topRows<3>().cwiseAbs().maxCoeff() == 0.0);
  const Vector3d oracle = Vector3d((15.0 - 40) / 80, (25.0 - 30) / 80, 1).normalized();
  CHECK((grid.ray(0, 0, 2, 1).tail<3>() - oracle).norm() < 1e-15);

  std::mt19937_64 rng(1);
  const Pose p{random_rotation(rng), Vector3d(3, -7, 12)};
  CHECK(max_orthogonality_error(view_raymap(k, p, 12, 16)) <= 1e-9);
}

TEST_CASE("normalized ray-map matches a direct evaluation") {
  const CameraRig rig = default_surround_rig(64, 48);
  const Trajectory traj = wiggly_trajectory(3);
  const int h = 6, w = 8;
  const RayMap rm = normalized_raymap(rig, traj, h, w);
  REQUIRE(rm.n_frames() == 3);
  REQUIRE(rm.n_views() == 6);
  REQUIRE(rm.data().size() == std::size_t(3) * 6 * h * w * 6);

  const Intrinsics& k0 = rig.reference().intrinsics;
  const Matrix3d k0_inv = k0.matrix().inverse();
  double worst = 0;
  for (std::size_t f = 0; f < traj.size(); ++f) {
    const Pose ego = traj[f].to_pose();
    const Pose ref = compose(ego, rig.reference().pose);
    for (std::size_t v = 0; v < rig.size(); ++v) {
      const Pose cam = compose(ego, rig[v].pose);
      const Vector3d o = ref.rotation.transpose() * (cam.translation - ref.translation);
      for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
          const Vector3d px((c + 0.5) * 64.0 / w, (r + 0.5) * 48.0 / h, 1.0);
          const Vector3d d = (ref.rotation.transpose() * cam.rotation * k0_inv * px).normalized();
          Eigen::Matrix<double, 6, 1> expect;
          expect << o.cross(d), d;
          worst = std::max(worst, (rm.ray(f, v, std::size_t(r), std::size_t(c)) - expect).cwiseAbs().maxCoeff());
        }
    }
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("reference view has a zero centre in every frame") {
  const RayMap rm = normalized_raymap(default_surround_rig(), wiggly_trajectory(5), 4, 4);
  for (std::size_t f = 0; f < rm.n_frames(); ++f)
    for (std::size_t r = 0; r < 4; ++r)
      for (std::size_t c = 0; c < 4; ++c) CHECK(rm.ray(f, 0, r, c).head<3>().norm() == 0.0);
}

TEST_CASE("global rigid transforms leave the default ray-map unchanged") {
  std::mt19937_64 rng(11);
  const CameraRig rig = default_surround_rig(32, 24);
  const Trajectory traj = wiggly_trajectory(4);
  std::vector<std::vector<Pose>> base, moved;
  const Pose g{random_rotation(rng), Vector3d(40, -30, 5)};
  for (const auto& e : traj.poses()) {
    std::vector<Pose> a, b;
    for (const auto& [k, p] : rig_world_cameras(rig, e)) {
      a.push_back(p);
      b.push_back(compose(g, p));
    }
    base.push_back(a);
    moved.push_back(b);
  }
  const Intrinsics& k0 = rig.reference().intrinsics;
  const RayMap x = normalized_raymap(k0, base, 0, 6, 8);
  const RayMap y = normalized_raymap(k0, moved, 0, 6, 8);
  CHECK((Eigen::Map<const Eigen::VectorXd>(x.data().data(), Eigen::Index(x.data().size())) -
         Eigen::Map<const Eigen::VectorXd>(y.data().data(), Eigen::Index(y.data().size())))
            .cwiseAbs()
            .maxCoeff() <= 1e-9);

  const RayMap lx = normalized_raymap(k0, base, 0, 6, 8, true);
  const RayMap ly = normalized_raymap(k0, moved, 0, 6, 8, true);
  double diff = 0;
  for (std::size_t i = 0; i < lx.data().size(); ++i) diff = std::max(diff, std::abs(lx.data()[i] - ly.data()[i]));
  CHECK(diff > 1e-3);
}

TEST_CASE("non-reference intrinsics do not matter") {
  const CameraRig rig = default_surround_rig(64, 48);
  std::vector<Camera> cams = rig.cameras();
  for (std::size_t i = 1; i < cams.size(); ++i) cams[i].intrinsics = Intrinsics::make(20 + i, 33, 10, 9, 21, 19);
  const CameraRig other(cams, 0);
  const Trajectory traj = wiggly_trajectory(3);
  CHECK(normalized_raymap(rig, traj, 6, 8) == normalized_raymap(other, traj, 6, 8));
}

TEST_CASE("reference index override and errors") {
  const CameraRig rig = default_surround_rig();
  NormalizationConfig cfg;
  cfg.reference_index = 3;
  const RayMap rm = normalized_raymap(rig, wiggly_trajectory(2), 4, 4, cfg);
  CHECK(rm.ray(1, 3, 2, 2).head<3>().norm() == 0.0);
  cfg.reference_index = 6;
  CHECK_THROWS(normalized_raymap(rig, wiggly_trajectory(2), 4, 4, cfg));
  CHECK_THROWS(normalized_raymap(rig, Trajectory{}, 4, 4));
}

TEST_CASE("downsampling") {
  const RayMap rm = normalized_raymap(default_surround_rig(), wiggly_trajectory(4), 8, 8);
  CHECK(downsample(rm, 1, 1) == rm);
  const RayMap half = downsample(rm, 2, 2);
  CHECK(half.n_frames() == 2);
  CHECK(half.height() == 4);
  Vector3d mean_moment = Vector3d::Zero();
  for (std::size_t r = 2; r < 4; ++r)
    for (std::size_t c = 4; c < 6; ++c) mean_moment += rm.ray(2, 2, r, c).head<3>() / 4.0;
  CHECK((half.ray(1, 2, 1, 2).head<3>() - mean_moment).norm() < 1e-12);
  CHECK_THROWS_AS(downsample(rm, 3, 1), std::invalid_argument);
  CHECK_THROWS_AS(downsample(rm, 1, 3), std::invalid_argument);

  // Tilted 2x2 block: directions (±e, 0, 1) and (0, ±e, 1) normalized average to +z.
  RayMap block(1, 1, 2, 2);
  const double e = 0.01;
  const Vector3d dirs[4] = {Vector3d(e, 0, 1).normalized(), Vector3d(-e, 0, 1).normalized(),
                            Vector3d(0, e, 1).normalized(), Vector3d(0, -e, 1).normalized()};
  for (int i = 0; i < 4; ++i) block.set(0, 0, std::size_t(i / 2), std::size_t(i % 2), {Vector3d::Zero(), dirs[i]});
  CHECK((downsample(block, 2, 1).ray(0, 0, 0, 0).tail<3>() - Vector3d::UnitZ()).norm() < 1e-9);

  RayMap skew(1, 1, 2, 2);
  const Vector3d a = Vector3d(e, 0, 1).normalized(), b = Vector3d(2 * e, 0, 1).normalized();
  for (int i = 0; i < 4; ++i) skew.set(0, 0, std::size_t(i / 2), std::size_t(i % 2), {Vector3d::Zero(), i % 2 ? a : b});
  CHECK((downsample(skew, 2, 1).ray(0, 0, 0, 0).tail<3>() - (a + b).normalized()).norm() < 1e-12);
}

TEST_CASE("binary ray-map format") {
  const auto dir = fs::temp_directory_path() / "occunav_test_raymap";
  fs::create_directories(dir);
  std::mt19937_64 rng(2);
  std::normal_distribution<float> n;
  RayMapf rm(2, 3, 4, 5);
  for (auto& x : rm.data()) x = n(rng);
  write_raymap(rm, dir / "a.rm");
  CHECK(read_raymap(dir / "a.rm") == rm);

  auto bytes = encode_raymap(rm);
  CHECK(bytes.size() == 8 + 16 + rm.data().size() * 4);
  auto cut = bytes;
  cut.resize(cut.size() - 3);
  CHECK_THROWS_WITH_AS(decode_raymap(cut), doctest::Contains("payload length"), DataError);
  auto extra = bytes;
  extra.push_back(0);
  CHECK_THROWS_AS(decode_raymap(extra), DataError);
  auto magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS_WITH_AS(decode_raymap(magic), doctest::Contains("magic"), DataError);
  CHECK_THROWS_AS(read_raymap(dir / "missing.rm"), DataError);
  fs::remove_all(dir);
}
