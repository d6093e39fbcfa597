#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace occunav {

template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Mat3 = Eigen::Matrix<Scalar, 3, 3>;

using Vector3d = Vec3<double>;
using Matrix3d = Mat3<double>;

/// Pinhole intrinsics in pixel units. No distortion.
template <typename Scalar>
struct IntrinsicsT {
  Scalar fx{1}, fy{1};
  Scalar cx{0}, cy{0};
  int width{1}, height{1};

  static IntrinsicsT make(Scalar fx, Scalar fy, Scalar cx, Scalar cy,
                          int width, int height) {
    IntrinsicsT k{fx, fy, cx, cy, width, height};
    if (!k.valid())
      throw std::invalid_argument("intrinsics: require fx, fy > 0 and principal point inside the image");
    return k;
  }

  bool valid() const {
    return fx > 0 && fy > 0 && width > 0 && height > 0 && cx > 0 &&
           cx < width && cy > 0 && cy < height;
  }

  Mat3<Scalar> matrix() const {
    Mat3<Scalar> K;
    K << fx, 0, cx, 0, fy, cy, 0, 0, 1;
    return K;
  }

  /// K^-1 [u, v, 1]^T in closed form.
  Vec3<Scalar> backproject(Scalar u, Scalar v) const {
    return Vec3<Scalar>((u - cx) / fx, (v - cy) / fy, Scalar(1));
  }

  template <typename Other>
  IntrinsicsT<Other> cast() const {
    return {Other(fx), Other(fy), Other(cx), Other(cy), width, height};
  }

  bool operator==(const IntrinsicsT&) const = default;
};

/// Rigid transform, camera-to-world (or child-to-parent) convention:
/// x_parent = rotation * x_child + translation.
template <typename Scalar>
struct PoseT {
  Mat3<Scalar> rotation{Mat3<Scalar>::Identity()};
  Vec3<Scalar> translation{Vec3<Scalar>::Zero()};

  static PoseT identity() { return {}; }

  static PoseT translate(Scalar x, Scalar y, Scalar z) {
    PoseT p;
    p.translation = Vec3<Scalar>(x, y, z);
    return p;
  }

  static PoseT rot_z(Scalar angle) {
    PoseT p;
    p.rotation = Eigen::AngleAxis<Scalar>(angle, Vec3<Scalar>::UnitZ()).toRotationMatrix();
    return p;
  }

  bool valid(Scalar tol = Scalar(1e-9)) const {
    const Mat3<Scalar> gram = rotation.transpose() * rotation;
    return (gram - Mat3<Scalar>::Identity()).cwiseAbs().maxCoeff() <= tol &&
           std::abs(rotation.determinant() - Scalar(1)) <= tol &&
           translation.allFinite();
  }

  Vec3<Scalar> apply(const Vec3<Scalar>& x) const {
    return rotation * x + translation;
  }

  template <typename Other>
  PoseT<Other> cast() const {
    return {rotation.template cast<Other>(), translation.template cast<Other>()};
  }
};

using Intrinsics = IntrinsicsT<double>;
using Pose = PoseT<double>;

/// Applies b then a.
template <typename Scalar>
PoseT<Scalar> compose(const PoseT<Scalar>& a, const PoseT<Scalar>& b) {
  return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
}

template <typename Scalar>
PoseT<Scalar> invert(const PoseT<Scalar>& p) {
  const Mat3<Scalar> rt = p.rotation.transpose();
  return {rt, -(rt * p.translation)};
}

/// Unit world-frame direction of the ray through pixel (u, v).
///
/// The default form is normalize(R K^-1 [u v 1]^T). With `translate_direction`
/// set, the camera translation is added before normalizing (d = R K^-1 p + t),
/// reproducing the literal printed form for comparison studies.
template <typename Scalar>
Vec3<Scalar> pixel_direction(const IntrinsicsT<Scalar>& intr,
                             const PoseT<Scalar>& pose, Scalar u, Scalar v,
                             bool translate_direction = false) {
  if (!(u >= 0 && u < intr.width && v >= 0 && v < intr.height))
    throw std::out_of_range("pixel_direction: pixel (" + std::to_string(double(u)) +
                            ", " + std::to_string(double(v)) + ") outside image");
  Vec3<Scalar> d = pose.rotation * intr.backproject(u, v);
  if (translate_direction) d += pose.translation;
  return d.normalized();
}

/// Continuous intrinsics-space coordinate of the centre of pixel (row, col)
/// of an h x w sampling of the image.
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 1> pixel_center(const IntrinsicsT<Scalar>& intr,
                                         int h, int w, int row, int col) {
  return {(Scalar(col) + Scalar(0.5)) * Scalar(intr.width) / Scalar(w),
          (Scalar(row) + Scalar(0.5)) * Scalar(intr.height) / Scalar(h)};
}

struct Camera {
  Intrinsics intrinsics;
  Pose pose;  // camera-to-ego
  std::string name;
};

/// Ordered panoramic rig. `reference_index` selects the view whose
/// intrinsics and frame anchor ray-map normalization.
class CameraRig {
 public:
  CameraRig() = default;
  CameraRig(std::vector<Camera> cameras, std::size_t reference_index = 0);

  const std::vector<Camera>& cameras() const { return cameras_; }
  std::size_t size() const { return cameras_.size(); }
  const Camera& operator[](std::size_t i) const { return cameras_.at(i); }
  std::size_t reference_index() const { return reference_index_; }
  const Camera& reference() const { return cameras_[reference_index_]; }

 private:
  std::vector<Camera> cameras_;
  std::size_t reference_index_ = 0;
};

/// Six-camera surround rig in the usual driving layout (front, front-left,
/// front-right, back, back-left, back-right), OpenCV camera axes
/// (x right, y down, z forward), mounted at `mount_height` metres.
CameraRig default_surround_rig(int width = 64, int height = 48,
                               double mount_height = 1.5);

/// Camera-to-ego rotation for a camera looking horizontally along `yaw`
/// in the ego frame (x forward, y left, z up).
Matrix3d look_along_yaw(double yaw);

struct EgoPose {
  double t = 0;  // seconds
  double x = 0, y = 0;
  double yaw = 0;
  double speed = 0;  // magnitude, m/s
  bool reverse = false;

  /// Planar pose as SE(3): yaw about +z, translation (x, y, 0).
  Pose to_pose() const;
  Vector3d position() const { return {x, y, 0.0}; }
};

class Trajectory {
 public:
  static constexpr double kDefaultRateHz = 12.0;

  Trajectory() = default;
  explicit Trajectory(std::vector<EgoPose> poses, double rate_hz = kDefaultRateHz);

  const std::vector<EgoPose>& poses() const { return poses_; }
  std::size_t size() const { return poses_.size(); }
  bool empty() const { return poses_.empty(); }
  const EgoPose& operator[](std::size_t i) const { return poses_.at(i); }
  const EgoPose& front() const { return poses_.front(); }
  const EgoPose& back() const { return poses_.back(); }
  double rate_hz() const { return rate_hz_; }

  /// Whether consecutive stamps differ by 1 / rate_hz within `tol`.
  bool uniform(double tol = 1e-6) const;

 private:
  std::vector<EgoPose> poses_;
  double rate_hz_ = kDefaultRateHz;
};

/// World poses of every rig camera with the ego at `ego`.
std::vector<std::pair<Intrinsics, Pose>> rig_world_cameras(const CameraRig& rig,
                                                           const EgoPose& ego);

/// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

/// Resamples onto the uniform grid t0, t0 + 1/rate, ... spanning the input.
/// x, y, speed are interpolated linearly, yaw along the shortest arc.
Trajectory resample(const Trajectory& traj, double rate_hz);

}  // namespace occunav
