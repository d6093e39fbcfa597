#include "occunav/geometry.hpp"

#include <algorithm>
#include <numbers>
#include <set>

namespace occunav {

CameraRig::CameraRig(std::vector<Camera> cameras, std::size_t reference_index)
    : cameras_(std::move(cameras)), reference_index_(reference_index) {
  if (cameras_.empty()) throw std::invalid_argument("camera rig: no cameras");
  if (reference_index_ >= cameras_.size())
    throw std::invalid_argument("camera rig: reference_index out of range");
  std::set<std::string> names;
  for (const auto& cam : cameras_) {
    if (!names.insert(cam.name).second)
      throw std::invalid_argument("camera rig: duplicate camera name '" + cam.name + "'");
    if (!cam.intrinsics.valid())
      throw std::invalid_argument("camera rig: invalid intrinsics for '" + cam.name + "'");
    if (!cam.pose.valid())
      throw std::invalid_argument("camera rig: rotation of '" + cam.name + "' is not a proper rotation");
  }
}

Matrix3d look_along_yaw(double yaw) {
  const double c = std::cos(yaw), s = std::sin(yaw);
  Matrix3d r;
  // Columns: camera x (right), y (down), z (forward) in ego coordinates.
  r.col(0) = Vector3d(s, -c, 0);
  r.col(1) = Vector3d(0, 0, -1);
  r.col(2) = Vector3d(c, s, 0);
  return r;
}

CameraRig default_surround_rig(int width, int height, double mount_height) {
  constexpr double deg = std::numbers::pi / 180.0;
  struct Layout {
    const char* name;
    double yaw_deg;
    double x, y;
    double hfov_deg;
  };
  // Front and back cameras sit on the vehicle axis; side pairs are toed out.
  const Layout layout[] = {
      {"front", 0, 1.5, 0.0, 70},        {"front_left", 55, 1.3, 0.5, 70},
      {"front_right", -55, 1.3, -0.5, 70}, {"back", 180, -1.0, 0.0, 110},
      {"back_left", 110, 1.0, 0.5, 70},  {"back_right", -110, 1.0, -0.5, 70},
  };
  std::vector<Camera> cams;
  for (const auto& l : layout) {
    const double fx = 0.5 * width / std::tan(0.5 * l.hfov_deg * deg);
    Camera cam;
    cam.name = l.name;
    cam.intrinsics = Intrinsics::make(fx, fx, 0.5 * width, 0.5 * height, width, height);
    cam.pose.rotation = look_along_yaw(l.yaw_deg * deg);
    cam.pose.translation = Vector3d(l.x, l.y, mount_height);
    cams.push_back(cam);
  }
  return CameraRig(std::move(cams), 0);
}

Pose EgoPose::to_pose() const {
  Pose p = Pose::rot_z(yaw);
  p.translation = Vector3d(x, y, 0);
  return p;
}

Trajectory::Trajectory(std::vector<EgoPose> poses, double rate_hz)
    : poses_(std::move(poses)), rate_hz_(rate_hz) {
  if (!(rate_hz_ > 0)) throw std::invalid_argument("trajectory: rate_hz must be positive");
  for (std::size_t i = 1; i < poses_.size(); ++i)
    if (!(poses_[i].t > poses_[i - 1].t))
      throw std::invalid_argument("trajectory: timestamps must be strictly increasing");
  for (const auto& p : poses_)
    if (p.speed < 0) throw std::invalid_argument("trajectory: speed must be non-negative");
}

bool Trajectory::uniform(double tol) const {
  for (std::size_t i = 1; i < poses_.size(); ++i)
    if (std::abs(poses_[i].t - poses_[i - 1].t - 1.0 / rate_hz_) > tol) return false;
  return true;
}

std::vector<std::pair<Intrinsics, Pose>> rig_world_cameras(const CameraRig& rig,
                                                           const EgoPose& ego) {
  const Pose body = ego.to_pose();
  std::vector<std::pair<Intrinsics, Pose>> out;
  out.reserve(rig.size());
  for (const auto& cam : rig.cameras()) out.emplace_back(cam.intrinsics, compose(body, cam.pose));
  return out;
}

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

Trajectory resample(const Trajectory& traj, double rate_hz) {
  if (traj.size() < 2) throw std::invalid_argument("resample: need at least 2 poses");
  if (!(rate_hz > 0)) throw std::invalid_argument("resample: rate_hz must be positive");
  const auto& in = traj.poses();
  const double t0 = in.front().t, t1 = in.back().t;
  const double dt = 1.0 / rate_hz;
  // Grid points within 1e-9 of the end are snapped onto it.
  const auto n = static_cast<std::size_t>(std::floor((t1 - t0) * rate_hz + 1e-9)) + 1;

  std::vector<EgoPose> out;
  out.reserve(n);
  std::size_t seg = 0;
  for (std::size_t k = 0; k < n; ++k) {
    double t = t0 + static_cast<double>(k) * dt;
    if (t > t1) t = t1;
    while (seg + 2 < in.size() && in[seg + 1].t < t) ++seg;
    const EgoPose& a = in[seg];
    const EgoPose& b = in[seg + 1];
    const double s = std::clamp((t - a.t) / (b.t - a.t), 0.0, 1.0);
    EgoPose p;
    p.t = t;
    p.x = a.x + s * (b.x - a.x);
    p.y = a.y + s * (b.y - a.y);
    p.yaw = wrap_angle(a.yaw + s * wrap_angle(b.yaw - a.yaw));
    p.speed = a.speed + s * (b.speed - a.speed);
    p.reverse = s < 1.0 ? a.reverse : b.reverse;
    out.push_back(p);
  }
  return Trajectory(std::move(out), rate_hz);
}

}  // namespace occunav
