#include "occunav/raymap.hpp"

#include <cmath>

#include "binary.hpp"
#include "occunav/io.hpp"
#include "occunav/parallel.hpp"

namespace occunav {

namespace {

constexpr std::string_view kRayMapMagic = "ONWM-RM1";

void check_extent(int h, int w) {
  if (h < 1 || w < 1) throw std::invalid_argument("ray-map extents must be >= 1");
}

}  // namespace

RayMap view_raymap(const Intrinsics& intr, const Pose& pose, int h, int w) {
  check_extent(h, w);
  RayMap out(1, 1, h, w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const auto px = pixel_center(intr, h, w, r, c);
      out.set(0, 0, r, c, plucker_embed(intr, pose, px.x(), px.y()));
    }
  return out;
}

RayMap normalized_raymap(const Intrinsics& k0,
                         const std::vector<std::vector<Pose>>& world_poses,
                         std::size_t reference_index, int h, int w,
                         bool literal_rotation) {
  check_extent(h, w);
  if (world_poses.empty()) throw std::invalid_argument("normalized_raymap: empty trajectory");
  const std::size_t n_views = world_poses.front().size();
  if (reference_index >= n_views)
    throw std::invalid_argument("normalized_raymap: reference index out of range");
  for (const auto& frame : world_poses)
    if (frame.size() != n_views)
      throw std::invalid_argument("normalized_raymap: view count differs between frames");

  // Rays in the reference camera's own frame, shared by every view: K0^-1 p.
  Eigen::Matrix3Xd rays(3, Eigen::Index(h) * w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const auto px = pixel_center(k0, h, w, r, c);
      rays.col(Eigen::Index(r) * w + c) = k0.backproject(px.x(), px.y());
    }

  RayMap out(world_poses.size(), n_views, h, w);
  parallel_for(world_poses.size(), [&](std::size_t f) {
    const Pose& ref = world_poses[f][reference_index];
    for (std::size_t v = 0; v < n_views; ++v) {
      const Pose& cam = world_poses[f][v];
      const Vector3d delta = cam.translation - ref.translation;
      Matrix3d to_ref;
      Vector3d center;
      if (literal_rotation) {
        // d_hat = Rk K0^-1 p, then rotated by R0 Rk^T.
        to_ref = ref.rotation * cam.rotation.transpose() * cam.rotation;
        center = ref.rotation * cam.rotation.transpose() * delta;
      } else {
        to_ref = ref.rotation.transpose() * cam.rotation;
        center = ref.rotation.transpose() * delta;
      }
      const Eigen::Matrix3Xd dirs = (to_ref * rays).colwise().normalized();
      for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
          const Vector3d d = dirs.col(Eigen::Index(r) * w + c);
          out.set(f, v, r, c, {center.cross(d), d});
        }
    }
  });
  return out;
}

RayMap normalized_raymap(const CameraRig& rig, const Trajectory& traj, int h, int w,
                         const NormalizationConfig& cfg) {
  if (traj.empty()) throw std::invalid_argument("normalized_raymap: empty trajectory");
  const std::size_t ref = cfg.reference_index.value_or(rig.reference_index());
  if (ref >= rig.size())
    throw std::invalid_argument("normalized_raymap: reference index does not match rig");
  std::vector<std::vector<Pose>> world(traj.size());
  for (std::size_t f = 0; f < traj.size(); ++f)
    for (const auto& [intr, pose] : rig_world_cameras(rig, traj[f])) world[f].push_back(pose);
  return normalized_raymap(rig[ref].intrinsics, world, ref, h, w,
                           cfg.literal_rotation);
}

RayMap downsample(const RayMap& in, int spatial, int temporal) {
  if (spatial < 1 || temporal < 1)
    throw std::invalid_argument("downsample: factors must be >= 1");
  if (in.height() % spatial || in.width() % spatial || in.n_frames() % temporal)
    throw std::invalid_argument("downsample: factors must divide the ray-map extents");
  if (spatial == 1 && temporal == 1) return in;

  const std::uint32_t h = in.height() / spatial, w = in.width() / spatial;
  RayMap out(in.n_frames() / temporal, in.n_views(), h, w);
  const double inv_area = 1.0 / (double(spatial) * spatial);
  for (std::uint32_t f = 0; f < out.n_frames(); ++f)
    for (std::uint32_t v = 0; v < out.n_views(); ++v)
      for (std::uint32_t r = 0; r < h; ++r)
        for (std::uint32_t c = 0; c < w; ++c) {
          RayMap::Ray acc = RayMap::Ray::Zero();
          for (int dr = 0; dr < spatial; ++dr)
            for (int dc = 0; dc < spatial; ++dc)
              acc += in.ray(std::size_t(f) * temporal, v, r * spatial + dr, c * spatial + dc);
          acc *= inv_area;
          acc.tail<3>().normalize();
          out.ray(f, v, r, c) = acc;
        }
  return out;
}

double max_orthogonality_error(const RayMap& raymap) {
  if (raymap.n_pixels() == 0) return 0.0;
  const auto px = raymap.pixels();
  return (px.topRows<3>().cwiseProduct(px.bottomRows<3>())).colwise().sum().cwiseAbs().maxCoeff();
}

std::vector<std::uint8_t> encode_raymap(const RayMapf& raymap) {
  detail::ByteWriter w;
  w.bytes(kRayMapMagic);
  w.put(raymap.n_frames());
  w.put(raymap.n_views());
  w.put(raymap.height());
  w.put(raymap.width());
  w.buffer().reserve(w.buffer().size() + raymap.data().size() * 4);
  for (float x : raymap.data()) w.put(x);
  return std::move(w.buffer());
}

RayMapf decode_raymap(const std::vector<std::uint8_t>& bytes) {
  detail::ByteReader r(bytes, "ray-map");
  r.expect_magic(kRayMapMagic);
  const auto nf = r.get<std::uint32_t>();
  const auto nv = r.get<std::uint32_t>();
  const auto h = r.get<std::uint32_t>();
  const auto w = r.get<std::uint32_t>();
  const std::uint64_t count = std::uint64_t(nf) * nv * h * w * RayMapf::kChannels;
  if (r.remaining() != count * 4)
    throw DataError("ray-map: payload length mismatch (expected " + std::to_string(count * 4) +
                    " bytes, found " + std::to_string(r.remaining()) + ")");
  RayMapf out(nf, nv, h, w);
  for (auto& x : out.data()) x = r.get<float>("payload");
  return out;
}

void write_raymap(const RayMapf& raymap, const std::filesystem::path& path) {
  detail::write_bytes(path, encode_raymap(raymap));
}

RayMapf read_raymap(const std::filesystem::path& path) {
  try {
    return decode_raymap(detail::read_bytes(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace occunav
