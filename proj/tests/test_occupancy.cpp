#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <numbers>
#include <random>

#include "occunav/io.hpp"
#include "occunav/occupancy.hpp"

using namespace occunav;
namespace fs = std::filesystem;

namespace {

const SemanticTaxonomy kTax = SemanticTaxonomy::nuscenes_occupancy();

// One forward-looking 1x1 camera at the ego origin.
CameraRig pinhole_rig(int size = 1) {
  return CameraRig({{Intrinsics::make(size, size, size / 2.0, size / 2.0, size, size),
                     Pose{look_along_yaw(0.0), Vector3d::Zero()}, "probe"}});
}

std::size_t brute_force_count(const SemanticOccupancyGrid& g, const OrientedBox& box, const std::vector<Label>& classes) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < g.geometry().voxel_count(); ++i) {
    if (std::find(classes.begin(), classes.end(), g.at(i)) == classes.end()) continue;
    const Vector3d local = box.rotation.transpose() * (g.geometry().center(i) - box.center);
    if ((local.cwiseAbs().array() <= box.half_extents.array()).all()) ++n;
  }
  return n;
}

}  // namespace

TEST_CASE("taxonomy") {
  CHECK(kTax.size() == 17);
  CHECK(kTax.name(kTax.free()) == "free");
  CHECK(kTax.name(kTax.drivable()) == "drivable surface");
  CHECK(kTax.is_obstacle(kTax.index_of("car")));
  CHECK(kTax.is_obstacle(kTax.index_of("pedestrian")));
  CHECK(kTax.is_obstacle(kTax.index_of("barrier")));
  CHECK_FALSE(kTax.is_obstacle(kTax.drivable()));
  CHECK_THROWS(kTax.index_of("spaceship"));
  CHECK_THROWS(SemanticTaxonomy({"free", "road", "road"}, {}, "road", "free"));
  CHECK_THROWS(SemanticTaxonomy({"free", "road"}, {"road"}, "road", "free"));
}

TEST_CASE("grid indexing and voxel lookup") {
  const GridGeometry g{Vector3d(-1, -2, -3), 0.5, {4, 6, 8}};
  CHECK(g.voxel_count() == 192);
  CHECK(g.index(1, 2, 3) == (1 * 6 + 2) * 8 + 3);
  const auto c = g.coords(g.index(3, 5, 7));
  CHECK(c == std::array<std::uint32_t, 3>{3, 5, 7});
  CHECK((g.center(0, 0, 0) - Vector3d(-0.75, -1.75, -2.75)).norm() < 1e-15);
  CHECK(g.voxel_of(Vector3d(-1, -2, -3.01)) == std::nullopt);
  CHECK(g.voxel_of(Vector3d(1, 0, 0)) == std::nullopt);  // max face is outside
  CHECK(g.voxel_of(Vector3d(-1, -2, -3)) == g.index(0, 0, 0));
  // A point on an interior face belongs to the voxel whose lower face it is.
  CHECK(g.voxel_of(Vector3d(-0.5, -1.9, -2.9)) == g.index(1, 0, 0));
  CHECK(g.voxel_of(Vector3d(std::nan(""), 0, 0)) == std::nullopt);
  CHECK_THROWS(GridGeometry{Vector3d::Zero(), 0.0, {1, 1, 1}}.validate());
}

TEST_CASE("label_at") {
  SemanticOccupancyGrid g(GridGeometry{Vector3d::Zero(), 0.5, {4, 4, 4}}, kTax);
  const Label car = kTax.index_of("car");
  g.set(0, 0, 0, car);
  CHECK(g.label_at(Vector3d(0.25, 0.25, 0.25)) == car);
  CHECK(g.label_at(Vector3d(0.25, 0.25, -0.25)) == kTax.free());
  CHECK(g.label_at(Vector3d(0.75, 0.25, 0.25)) == kTax.free());
  CHECK(g.occupied_count() == 1);
  CHECK_THROWS(g.set(0, Label(17)));
}

TEST_CASE("query_box") {
  SemanticOccupancyGrid g(GridGeometry{Vector3d(-5, -5, 0), 0.25, {40, 40, 8}}, kTax);
  const std::vector<Label> obstacles = kTax.obstacle_labels();
  CHECK(query_box(g, OrientedBox::upright(Vector3d(0, 0, 1), 0.3, Vector3d(4, 2, 2)), obstacles) == 0);

  const Label car = kTax.index_of("car");
  g.set(g.geometry().index(20, 20, 2), car);
  CHECK(query_box(g, OrientedBox::axis_aligned(Vector3d(-0.1, -0.1, 0.4), Vector3d(0.4, 0.4, 0.8)), obstacles) == 1);
  CHECK(query_box(g, OrientedBox::axis_aligned(Vector3d(-0.1, -0.1, 0.4), Vector3d(0.4, 0.4, 0.8)),
                  std::vector<Label>{kTax.index_of("truck")}) == 0);

  // Two-voxel-thick barrier wall along y, queried with a 45 degree box.
  const Label barrier = kTax.index_of("barrier");
  g.fill(OrientedBox::axis_aligned(Vector3d(1.0, -3, 0), Vector3d(1.5, 3, 1.0)), barrier);
  const auto box = OrientedBox::upright(Vector3d(1.2, 0.3, 0.5), std::numbers::pi / 4, Vector3d(2.0, 1.0, 0.8));
  const auto expected = brute_force_count(g, box, obstacles);
  CHECK(expected > 0);
  CHECK(query_box(g, box, obstacles) == expected);
  CHECK_THROWS(query_box(g, OrientedBox::upright(Vector3d::Zero(), 0, Vector3d(0, 1, 1)), obstacles));
}

TEST_CASE("sequence nearest frame") {
  const SemanticOccupancyGrid g(GridGeometry{Vector3d::Zero(), 1, {1, 1, 1}}, kTax);
  const OccupancySequence seq({g, g, g}, {0.0, 1.0, 2.0});
  CHECK(seq.nearest(-5) == 0);
  CHECK(seq.nearest(0.5) == 0);
  CHECK(seq.nearest(0.51) == 1);
  CHECK(seq.nearest(9) == 2);
  CHECK_THROWS(OccupancySequence({g, g}, {1.0, 1.0}));
  const SemanticOccupancyGrid other(GridGeometry{Vector3d::Zero(), 2, {1, 1, 1}}, kTax);
  CHECK_THROWS(OccupancySequence({g, other}, {0.0, 1.0}));
}

TEST_CASE("fusion from single pixels") {
  const GridGeometry geo{Vector3d(-0.3, -5.3, -5.3), 0.5, {40, 21, 21}};
  const CameraRig rig = pinhole_rig();
  std::vector<ViewImages> views(1);
  views[0].depth = DepthImage::Zero(1, 1);
  views[0].labels = LabelImage::Zero(1, 1);
  CHECK(fuse_from_panorama(rig, EgoPose{}, views, geo, kTax).occupied_count() == 0);

  const Label car = kTax.index_of("car");
  views[0].depth(0, 0) = 10.0f;
  views[0].labels(0, 0) = car;
  const auto fused = fuse_from_panorama(rig, EgoPose{}, views, geo, kTax);
  CHECK(fused.occupied_count() == 1);
  CHECK(fused.label_at(Vector3d(10, 0, 0)) == car);

  CHECK_THROWS(fuse_from_panorama(rig, EgoPose{}, std::vector<ViewImages>(2, views[0]), geo, kTax));
}

TEST_CASE("fusion majority vote breaks ties to the lower label") {
  const GridGeometry geo{Vector3d(-0.3, -5.3, -5.3), 0.5, {40, 21, 21}};
  // 2x1 image: both pixel rays cross the same voxel at 10 m.
  const CameraRig rig({{Intrinsics::make(1000, 1000, 1.0, 0.5, 2, 1), Pose{look_along_yaw(0.0), Vector3d::Zero()}, "c"}});
  std::vector<ViewImages> views(1);
  views[0].depth = DepthImage::Constant(1, 2, 10.0f);
  views[0].labels.resize(1, 2);
  views[0].labels << kTax.index_of("truck"), kTax.index_of("car");
  const auto fused = fuse_from_panorama(rig, EgoPose{}, views, geo, kTax);
  CHECK(fused.occupied_count() == 1);
  CHECK(fused.label_at(Vector3d(10, 0, 0)) == kTax.index_of("car"));
}

TEST_CASE("rendering") {
  SemanticOccupancyGrid g(GridGeometry{Vector3d(-0.1, -5.1, -5.1), 0.2, {80, 51, 51}}, kTax);
  const CameraRig rig = pinhole_rig();
  auto empty = render_views(g, rig, EgoPose{}, 1, 1);
  CHECK(empty[0].depth(0, 0) == 0.0f);

  const Label car = kTax.index_of("car");
  const auto v = g.geometry().voxel_of(Vector3d(10, 0, 0));
  REQUIRE(v);
  g.set(*v, car);
  const Vector3d centre = g.geometry().center(*v);
  auto one = render_views(g, rig, EgoPose{}, 1, 1);
  CHECK(one[0].labels(0, 0) == car);
  CHECK(std::abs(one[0].depth(0, 0) - centre.x()) <= 0.1 + 1e-6);

  // Wall at x in [10, 10.2), |y| <= 2, |z| <= 1 seen by a 41x41 camera.
  SemanticOccupancyGrid wall(g.geometry(), kTax);
  const Label barrier = kTax.index_of("barrier");
  wall.fill(OrientedBox::axis_aligned(Vector3d(10.0, -2.0, -1.0), Vector3d(10.2, 2.0, 1.0)), barrier);
  const int n = 41;
  const CameraRig cam({{Intrinsics::make(20, 20, 20.5, 20.5, n, n), Pose{look_along_yaw(0.0), Vector3d::Zero()}, "c"}});
  const auto img = render_views(wall, cam, EgoPose{}, n, n)[0];
  int hits = 0, expected = 0, ambiguous = 0;
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      // Camera x right = ego -y, camera y down = ego -z.
      const double y = -(c + 0.5 - 20.5) / 20 * 10.0, z = -(r + 0.5 - 20.5) / 20 * 10.0;
      const bool inside = std::abs(y) < 1.9 && std::abs(z) < 0.9;
      const bool outside = std::abs(y) > 2.3 || std::abs(z) > 1.3;
      hits += img.labels(r, c) == barrier;
      expected += inside;
      ambiguous += !inside && !outside;
      if (inside) CHECK(img.labels(r, c) == barrier);
      if (outside) CHECK(img.depth(r, c) == 0.0f);
    }
  CHECK(hits >= expected);
  CHECK(hits <= expected + ambiguous);
}

TEST_CASE("iou and miou") {
  const GridGeometry geo{Vector3d::Zero(), 1, {4, 4, 1}};
  SemanticOccupancyGrid gt(geo, kTax), pred(geo, kTax);
  const Label car = kTax.index_of("car"), truck = kTax.index_of("truck");
  for (std::uint32_t i = 0; i < 4; ++i) gt.set(i, 0, 0, car);
  auto same = iou_miou(gt, gt);
  CHECK(same.iou == 1.0);
  CHECK(same.miou == 1.0);
  CHECK(iou_miou(pred, gt).iou == 0.0);

  pred.set(0, 0, 0, car);
  pred.set(1, 0, 0, car);
  auto half = iou_miou(pred, gt);
  CHECK(*half.per_class[car] == doctest::Approx(0.5));
  CHECK_FALSE(half.per_class[truck].has_value());
  CHECK(half.miou == doctest::Approx(0.5));
  CHECK(iou_miou(pred, gt).iou == iou_miou(gt, pred).iou);

  pred.set(3, 3, 0, truck);
  auto fp = iou_miou(pred, gt);
  CHECK(*fp.per_class[truck] == 0.0);
  CHECK(fp.miou == doctest::Approx(0.25));
  CHECK(fp.iou == doctest::Approx(2.0 / 5.0));

  std::vector<std::uint8_t> mask(geo.voxel_count(), 0);
  mask[geo.index(0, 0, 0)] = 1;
  CHECK(iou_miou(pred, gt, mask).iou == 1.0);

  const SemanticOccupancyGrid other(GridGeometry{Vector3d::Zero(), 1, {4, 4, 2}}, kTax);
  CHECK_THROWS(iou_miou(pred, other));
}

TEST_CASE("grid serialization") {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> lab(0, 16);
  SemanticOccupancyGrid g(GridGeometry{Vector3d(-1.5, 2.25, -0.5), 0.25, {7, 5, 3}}, kTax);
  for (std::size_t i = 0; i < g.geometry().voxel_count(); ++i) g.set(i, Label(lab(rng) < 10 ? 0 : lab(rng)));
  CHECK(decode_grid(encode_grid(g)) == g);

  const SemanticOccupancyGrid free_grid(GridGeometry::nuscenes_occupancy(), kTax);
  CHECK(encode_grid(free_grid).size() < 1024);

  auto bytes = encode_grid(g);
  bytes.resize(bytes.size() - 2);
  CHECK_THROWS_AS(decode_grid(bytes), DataError);
  bytes = encode_grid(g);
  bytes[bytes.size() - 4] += 1;  // lengthen the final run
  CHECK_THROWS_WITH_AS(decode_grid(bytes), doctest::Contains("run"), DataError);
  bytes = encode_grid(g);
  bytes[bytes.size() - 6] = 99;  // label index beyond the taxonomy
  CHECK_THROWS_WITH_AS(decode_grid(bytes), doctest::Contains("label"), DataError);
  bytes = encode_grid(g);
  bytes[2] = 'x';
  CHECK_THROWS_AS(decode_grid(bytes), DataError);

  const auto dir = fs::temp_directory_path() / "occunav_test_occupancy";
  fs::remove_all(dir);
  const OccupancySequence seq({g}, {0.5});
  write_sequence(seq, dir / "seq");
  const auto back = read_sequence(dir / "seq");
  CHECK(back.timestamps() == seq.timestamps());
  CHECK(back.grid(0) == g);
  CHECK_THROWS_AS(read_sequence(dir / "nope"), DataError);
  fs::remove_all(dir);
}

TEST_CASE("panorama bundle round trip") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<float> d(0, 50);
  std::vector<ViewImages> views(3);
  for (auto& v : views) {
    v.depth = DepthImage::NullaryExpr(4, 6, [&] { return d(rng); });
    v.labels = LabelImage::NullaryExpr(4, 6, [&] { return Label(d(rng) / 4); });
  }
  const auto dir = fs::temp_directory_path() / "occunav_test_panorama";
  fs::create_directories(dir);
  write_panorama(views, dir / "p.pv");
  const auto back = read_panorama(dir / "p.pv");
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK((back[i].depth == views[i].depth).all());
    CHECK((back[i].labels == views[i].labels).all());
  }
  fs::remove_all(dir);
}
