#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "occunav/geometry.hpp"

namespace occunav {

template <typename Scalar>
struct PluckerRayT {
  Vec3<Scalar> moment;
  Vec3<Scalar> direction;
};
using PluckerRay = PluckerRayT<double>;

/// (moment, direction) of the ray through pixel (u, v); the moment is taken
/// about the world origin, o x d with o the camera centre.
template <typename Scalar>
PluckerRayT<Scalar> plucker_embed(const IntrinsicsT<Scalar>& intr,
                                  const PoseT<Scalar>& pose, Scalar u, Scalar v,
                                  bool translate_direction = false) {
  const Vec3<Scalar> d = pixel_direction(intr, pose, u, v, translate_direction);
  return {pose.translation.cross(d), d};
}

/// Dense six-channel ray field, laid out frame-major, then view, then image
/// row, then column, with the channels (mx, my, mz, dx, dy, dz) innermost.
template <typename Scalar>
class RayMapT {
 public:
  static constexpr int kChannels = 6;
  using Ray = Eigen::Matrix<Scalar, kChannels, 1>;

  RayMapT() = default;
  RayMapT(std::uint32_t n_frames, std::uint32_t n_views, std::uint32_t height,
          std::uint32_t width)
      : n_frames_(n_frames), n_views_(n_views), height_(height), width_(width),
        data_(std::size_t(n_frames) * n_views * height * width * kChannels, Scalar(0)) {}

  std::uint32_t n_frames() const { return n_frames_; }
  std::uint32_t n_views() const { return n_views_; }
  std::uint32_t height() const { return height_; }
  std::uint32_t width() const { return width_; }
  std::size_t n_pixels() const { return data_.size() / kChannels; }

  std::vector<Scalar>& data() { return data_; }
  const std::vector<Scalar>& data() const { return data_; }

  std::size_t offset(std::size_t frame, std::size_t view, std::size_t row,
                     std::size_t col) const {
    return (((frame * n_views_ + view) * height_ + row) * width_ + col) * kChannels;
  }

  Eigen::Map<Ray> ray(std::size_t f, std::size_t v, std::size_t r, std::size_t c) {
    return Eigen::Map<Ray>(data_.data() + offset(f, v, r, c));
  }
  Eigen::Map<const Ray> ray(std::size_t f, std::size_t v, std::size_t r,
                            std::size_t c) const {
    return Eigen::Map<const Ray>(data_.data() + offset(f, v, r, c));
  }
  /// Pixel-major view of the whole payload: one column per pixel.
  Eigen::Map<const Eigen::Matrix<Scalar, kChannels, Eigen::Dynamic>> pixels() const {
    return {data_.data(), kChannels, Eigen::Index(n_pixels())};
  }

  void set(std::size_t f, std::size_t v, std::size_t r, std::size_t c,
           const PluckerRayT<Scalar>& p) {
    auto m = ray(f, v, r, c);
    m.template head<3>() = p.moment;
    m.template tail<3>() = p.direction;
  }

  template <typename Other>
  RayMapT<Other> cast() const {
    RayMapT<Other> out(n_frames_, n_views_, height_, width_);
    for (std::size_t i = 0; i < data_.size(); ++i) out.data()[i] = Other(data_[i]);
    return out;
  }

  bool same_shape(const RayMapT& o) const {
    return n_frames_ == o.n_frames_ && n_views_ == o.n_views_ &&
           height_ == o.height_ && width_ == o.width_;
  }

  bool operator==(const RayMapT&) const = default;

 private:
  std::uint32_t n_frames_ = 0, n_views_ = 0, height_ = 0, width_ = 0;
  std::vector<Scalar> data_;
};

using RayMap = RayMapT<double>;
using RayMapf = RayMapT<float>;

struct NormalizationConfig {
  /// View supplying the shared intrinsics and the anchor frame; the rig's
  /// reference view when unset.
  std::optional<std::size_t> reference_index;
  /// Use R0 * Rk^T rotations instead of the pose-invariant R0^T form.
  bool literal_rotation = false;
};

/// Ray field of a single camera sampled at h x w pixel centres.
RayMap view_raymap(const Intrinsics& intr, const Pose& pose, int h, int w);

/// Scale- and pose-normalized panoramic ray-map. Every view is backprojected
/// with the reference intrinsics K0 and expressed in the frame of the
/// reference camera of the same time step:
///   o = R0^T (tk - t0),  d = normalize(R0^T Rk K0^-1 [u v 1]^T).
RayMap normalized_raymap(const CameraRig& rig, const Trajectory& traj, int h, int w,
                         const NormalizationConfig& cfg = {});

/// Same as above from explicit per-frame world camera poses
/// (world_poses[frame][view]).
RayMap normalized_raymap(const Intrinsics& reference_intrinsics,
                         const std::vector<std::vector<Pose>>& world_poses,
                         std::size_t reference_index, int h, int w,
                         bool literal_rotation = false);

/// Spatial block averaging and temporal striding. Direction channels are
/// renormalized after averaging.
RayMap downsample(const RayMap& raymap, int spatial_factor, int temporal_factor);

/// Largest |dot(moment, direction)| over all pixels.
double max_orthogonality_error(const RayMap& raymap);

/// Binary format `ONWM-RM1`: magic, u32 n_frames, n_views, h, w (little
/// endian), float32 payload in memory order.
void write_raymap(const RayMapf& raymap, const std::filesystem::path& path);
inline void write_raymap(const RayMap& raymap, const std::filesystem::path& path) {
  write_raymap(raymap.cast<float>(), path);
}
RayMapf read_raymap(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_raymap(const RayMapf& raymap);
RayMapf decode_raymap(const std::vector<std::uint8_t>& bytes);

}  // namespace occunav
