#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <random>

#include "occunav/io.hpp"
#include "occunav/metrics.hpp"

using namespace occunav;
namespace fs = std::filesystem;

namespace {

Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  return Eigen::Quaterniond(n(rng), n(rng), n(rng), n(rng)).normalized().toRotationMatrix();
}

std::vector<Pose> random_path(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> g;
  std::vector<Pose> out;
  Vector3d p = Vector3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    p += Vector3d(1 + 0.3 * g(rng), 0.5 * g(rng), 0.2 * g(rng));
    out.push_back({random_rotation(rng), p});
  }
  return out;
}

ScenarioResult result(const char* id, bool passed, double reward) {
  return {id, passed, reward, passed ? "horizon" : "collision", 10};
}

}  // namespace

TEST_CASE("identity alignment") {
  std::mt19937_64 rng(1);
  const auto gt = random_path(rng, 12);
  const Sim3 s = sim3_align(gt, gt);
  CHECK(std::abs(s.scale - 1) < 1e-9);
  CHECK((s.rotation - Matrix3d::Identity()).norm() < 1e-9);
  CHECK(s.translation.norm() < 1e-9);
  const auto e = pose_errors(gt, gt, s);
  CHECK(e.rot_err < 1e-9);
  CHECK(e.trans_err < 1e-9);
}

TEST_CASE("alignment inverts a known similarity") {
  std::mt19937_64 rng(2);
  const auto gt = random_path(rng, 20);
  const Sim3 g{3.7, random_rotation(rng), Vector3d(5, -2, 8)};
  std::vector<Pose> est;
  for (const auto& p : gt) est.push_back(g.apply(p));
  const Sim3 s = sim3_align(est, gt);
  CHECK(std::abs(s.scale * g.scale - 1) < 1e-9);
  CHECK((s.rotation * g.rotation - Matrix3d::Identity()).norm() < 1e-9);
  const Sim3 inv = g.inverse();
  CHECK(std::abs(inv.scale - s.scale) < 1e-9);
  CHECK((inv.translation - s.translation).norm() < 1e-8);
  CHECK(pose_errors(est, gt, s).residual_rms <= 1e-8);
}

TEST_CASE("noisy alignment residual tracks the noise level") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0, 0.01);
  std::vector<Vector3d> gt, est;
  std::uniform_real_distribution<double> u(-10, 10);
  for (int i = 0; i < 100; ++i) {
    gt.emplace_back(u(rng), u(rng), u(rng));
    est.push_back(gt.back() + Vector3d(n(rng), n(rng), n(rng)));
  }
  const Sim3 s = sim3_align(est, gt);
  double sq = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) sq += (s.apply(est[i]) - gt[i]).squaredNorm();
  // Per-axis RMS of the residual.
  const double rms = std::sqrt(sq / (3.0 * double(gt.size())));
  CHECK(std::abs(rms - 0.01) <= 0.2 * 0.01);
}

TEST_CASE("alignment errors") {
  std::vector<Vector3d> line{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
  CHECK_THROWS_AS(sim3_align(line, line), std::invalid_argument);
  std::vector<Vector3d> two{{0, 0, 0}, {1, 0, 0}};
  CHECK_THROWS_AS(sim3_align(two, two), std::invalid_argument);
  std::vector<Vector3d> tri{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  CHECK_THROWS_AS(sim3_align(tri, line), std::invalid_argument);
  // Planar (rank 2) sets are fine.
  CHECK_NOTHROW(sim3_align(tri, tri));
}

TEST_CASE("pose error definitions") {
  std::vector<Pose> gt, rotated, shifted;
  for (int i = 0; i <= 10; ++i) {
    Pose p = Pose::translate(double(i), 0, 0);
    gt.push_back(p);
    Pose r = p;
    r.rotation = Eigen::AngleAxisd(0.01, Vector3d::UnitZ()).toRotationMatrix();
    rotated.push_back(r);
    shifted.push_back(Pose::translate(double(i), 0.05, 0));
  }
  CHECK(std::abs(pose_errors(rotated, gt).rot_err - 0.01) < 1e-9);
  CHECK(pose_errors(shifted, gt).trans_err == doctest::Approx(0.005));
  std::vector<Pose> still(3);
  CHECK_THROWS(pose_errors(still, still));
  CHECK(rotation_angle(Matrix3d::Identity(), Eigen::AngleAxisd(1e-7, Vector3d::UnitX()).toRotationMatrix()) ==
        doctest::Approx(1e-7).epsilon(1e-6));
}

TEST_CASE("pass rate") {
  CHECK(scenario_pass_rate({result("a", true, 1), result("b", true, 1)}) == 1.0);
  std::vector<ScenarioResult> four{result("a", true, 1), result("b", false, 0.5), result("c", true, 1),
                                   result("d", false, 0.2)};
  CHECK(scenario_pass_rate(four) == 0.5);
  const double before = scenario_pass_rate(four);
  four[1] = result("b", true, 0.9);
  CHECK(scenario_pass_rate(four) >= before);
  CHECK_THROWS(scenario_pass_rate({}));
}

TEST_CASE("reward histogram") {
  const auto same = reward_histogram({result("a", true, 0.7), result("b", true, 0.7)}, 5);
  REQUIRE(same.size() == 1);
  CHECK(same[0].count == 2);

  std::vector<ScenarioResult> rs;
  for (int i = 0; i < 10; ++i) rs.push_back(result("x", true, 0.9 + 0.01 * i));
  for (int i = 0; i < 10; ++i) rs.push_back(result("y", false, 0.1 + 0.01 * i));
  const auto bins = reward_histogram(rs, 10);
  std::size_t total = 0;
  for (const auto& b : bins) total += b.count;
  CHECK(total == rs.size());
  CHECK(bins.front().lo == doctest::Approx(0.1));
  CHECK(bins.back().hi == doctest::Approx(0.99));
  auto bin_of = [&](double r) {
    for (std::size_t b = 0; b < bins.size(); ++b)
      if (r >= bins[b].lo && (r < bins[b].hi || b + 1 == bins.size())) return b;
    return bins.size();
  };
  std::size_t low_max = 0, high_min = bins.size();
  for (const auto& r : rs) {
    if (r.id == "y") low_max = std::max(low_max, bin_of(r.average_reward));
    else high_min = std::min(high_min, bin_of(r.average_reward));
  }
  CHECK(low_max < high_min);
  CHECK(bins.front().count > 0);
  CHECK(bins.back().count > 0);
  CHECK(histogram_to_csv(bins).rfind("bin_lo,bin_hi,count\n", 0) == 0);
  CHECK_THROWS(reward_histogram(rs, 0));
  CHECK_THROWS(reward_histogram({}, 3));
}

TEST_CASE("batch report and result invariants") {
  const auto report = batch_report({result("a", true, 1.0), result("b", false, 0.5)});
  CHECK(report["summary"]["spr"] == 0.5);
  CHECK(report["summary"]["mean_reward"] == 0.75);
  CHECK(report["results"].size() == 2);
  const auto back = scenario_result_from_json(report["results"][1]);
  CHECK(back.id == "b");
  CHECK(back.termination == "collision");
  auto bad = report["results"][0];
  bad["termination"] = "collision";
  CHECK_THROWS_AS(scenario_result_from_json(bad), DataError);
}

TEST_CASE("pose sequence files") {
  const auto dir = fs::temp_directory_path() / "occunav_test_metrics";
  fs::create_directories(dir);
  write_text(dir / "q.csv", "t,tx,ty,tz,qw,qx,qy,qz\n0,1,2,3,1,0,0,0\n1,2,2,3,0.7071067811865476,0,0,0.7071067811865476\n");
  const auto q = read_pose_sequence((dir / "q.csv").string());
  REQUIRE(q.size() == 2);
  CHECK((q[1].rotation * Vector3d::UnitX() - Vector3d::UnitY()).norm() < 1e-12);
  write_text(dir / "bad.csv", "a,b\n1,2\n");
  CHECK_THROWS_AS(read_pose_sequence((dir / "bad.csv").string()), DataError);
  write_trajectory(Trajectory(std::vector<EgoPose>{{0, 1, 2, 0.5}}), dir / "t.csv");
  CHECK(read_pose_sequence((dir / "t.csv").string())[0].translation == Vector3d(1, 2, 0));
  fs::remove_all(dir);
}
