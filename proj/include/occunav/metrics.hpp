#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "occunav/geometry.hpp"

namespace occunav {

/// x -> scale * rotation * x + translation.
template <typename Scalar>
struct Sim3T {
  Scalar scale{1};
  Mat3<Scalar> rotation{Mat3<Scalar>::Identity()};
  Vec3<Scalar> translation{Vec3<Scalar>::Zero()};

  Vec3<Scalar> apply(const Vec3<Scalar>& x) const { return scale * (rotation * x) + translation; }

  /// Maps a pose: rotation composes, the centre is transformed.
  PoseT<Scalar> apply(const PoseT<Scalar>& p) const {
    return {rotation * p.rotation, apply(p.translation)};
  }

  Sim3T inverse() const {
    const Mat3<Scalar> rt = rotation.transpose();
    return {Scalar(1) / scale, rt, -(rt * translation) / scale};
  }
};
using Sim3 = Sim3T<double>;

/// Closed-form least-squares similarity (Umeyama) taking `est` onto `gt`:
/// argmin sum |s R est_i + t - gt_i|^2, with reflection correction.
/// Throws std::invalid_argument for mismatched lengths, fewer than three
/// points, or rank < 2 point sets.
template <typename Scalar>
Sim3T<Scalar> sim3_align(const std::vector<Vec3<Scalar>>& est, const std::vector<Vec3<Scalar>>& gt) {
  if (est.size() != gt.size()) throw std::invalid_argument("sim3_align: sequences differ in length");
  if (est.size() < 3) throw std::invalid_argument("sim3_align: need at least 3 positions");
  const auto n = Eigen::Index(est.size());
  Eigen::Matrix<Scalar, 3, Eigen::Dynamic> src(3, n), dst(3, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    src.col(i) = est[std::size_t(i)];
    dst.col(i) = gt[std::size_t(i)];
  }
  const Vec3<Scalar> mu_src = src.rowwise().mean();
  const Vec3<Scalar> mu_dst = dst.rowwise().mean();
  src.colwise() -= mu_src;
  dst.colwise() -= mu_dst;
  const Scalar var_src = src.squaredNorm() / Scalar(n);

  const Mat3<Scalar> cov = dst * src.transpose() / Scalar(n);
  Eigen::JacobiSVD<Mat3<Scalar>> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3<Scalar> sv = svd.singularValues();
  const Scalar tol = std::numeric_limits<Scalar>::epsilon() * Scalar(1e4) * std::max(sv[0], Scalar(1e-300));
  if (!(sv[1] > tol) || !(var_src > 0))
    throw std::invalid_argument("sim3_align: degenerate point set (rank < 2)");

  Vec3<Scalar> signs = Vec3<Scalar>::Ones();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0) signs[2] = Scalar(-1);

  Sim3T<Scalar> out;
  out.rotation = svd.matrixU() * signs.asDiagonal() * svd.matrixV().transpose();
  out.scale = sv.dot(signs) / var_src;
  out.translation = mu_dst - out.scale * out.rotation * mu_src;
  return out;
}

template <typename Scalar>
Sim3T<Scalar> sim3_align(const std::vector<PoseT<Scalar>>& est, const std::vector<PoseT<Scalar>>& gt) {
  std::vector<Vec3<Scalar>> a, b;
  for (const auto& p : est) a.push_back(p.translation);
  for (const auto& p : gt) b.push_back(p.translation);
  return sim3_align(a, b);
}

struct PoseErrors {
  double rot_err = 0;    // mean geodesic angle, radians
  double trans_err = 0;  // mean position error / gt path length
  double residual_rms = 0;
};

/// Errors of `est` after applying `alignment`, against `gt`.
PoseErrors pose_errors(const std::vector<Pose>& est, const std::vector<Pose>& gt,
                       const Sim3& alignment = {});

/// Geodesic angle between two rotations.
double rotation_angle(const Matrix3d& a, const Matrix3d& b);

/// Pose sequence from a trajectory file row set (planar, z = 0).
std::vector<Pose> to_poses(const Trajectory& traj);

/// Reads `t,x,y,yaw,speed,reverse` trajectories or `t,tx,ty,tz,qw,qx,qy,qz`
/// pose CSVs, selected by the header.
std::vector<Pose> read_pose_sequence(const std::string& path);

// ---- scenario outcomes ------------------------------------------------------

struct ScenarioResult {
  std::string id;
  bool passed = false;
  double average_reward = 0;
  std::string termination;  // "horizon", "collision", "off_drivable"
  std::size_t episode_length = 0;
};

nlohmann::json to_json(const ScenarioResult& r);
ScenarioResult scenario_result_from_json(const nlohmann::json& j);

/// Passed count over total.
double scenario_pass_rate(const std::vector<ScenarioResult>& results);

struct HistogramBin {
  double lo = 0, hi = 0;
  std::size_t count = 0;
};

/// Uniform bins over [min, max] of the average rewards; the top edge is
/// closed. Identical averages collapse into a single occupied bin.
std::vector<HistogramBin> reward_histogram(const std::vector<ScenarioResult>& results, std::size_t n_bins);
std::string histogram_to_csv(const std::vector<HistogramBin>& bins);

/// `{"results": [...], "summary": {"spr", "mean_reward"}}`.
nlohmann::json batch_report(const std::vector<ScenarioResult>& results);

}  // namespace occunav
