#include "occunav/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "occunav/io.hpp"

namespace occunav {

double rotation_angle(const Matrix3d& a, const Matrix3d& b) {
  // atan2 form stays accurate for small angles, unlike acos of the trace.
  const Matrix3d r = a.transpose() * b;
  const Vector3d axis(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  return std::atan2(0.5 * axis.norm(), 0.5 * (r.trace() - 1.0));
}

PoseErrors pose_errors(const std::vector<Pose>& est, const std::vector<Pose>& gt, const Sim3& alignment) {
  if (est.size() != gt.size()) throw std::invalid_argument("pose_errors: sequences differ in length");
  if (gt.empty()) throw std::invalid_argument("pose_errors: empty sequences");
  double length = 0;
  for (std::size_t i = 1; i < gt.size(); ++i) length += (gt[i].translation - gt[i - 1].translation).norm();
  if (!(length > 0)) throw std::invalid_argument("pose_errors: ground-truth trajectory has zero length");

  PoseErrors e;
  double sq = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const Pose aligned = alignment.apply(est[i]);
    e.rot_err += rotation_angle(aligned.rotation, gt[i].rotation);
    const double d = (aligned.translation - gt[i].translation).norm();
    e.trans_err += d;
    sq += d * d;
  }
  const double n = double(gt.size());
  e.rot_err /= n;
  e.trans_err /= n * length;
  e.residual_rms = std::sqrt(sq / n);
  return e;
}

std::vector<Pose> to_poses(const Trajectory& traj) {
  std::vector<Pose> out;
  for (const auto& p : traj.poses()) out.push_back(p.to_pose());
  return out;
}

std::vector<Pose> read_pose_sequence(const std::string& path) {
  const std::string text = read_text(path);
  const auto header = text.substr(0, text.find('\n'));
  if (header.rfind("t,x,y,yaw", 0) == 0) return to_poses(trajectory_from_csv(text));
  if (header.rfind("t,tx,ty,tz,qw,qx,qy,qz", 0) != 0)
    throw DataError(path + ": expected a trajectory or `t,tx,ty,tz,qw,qx,qy,qz` pose CSV");
  std::vector<Pose> out;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \r") == std::string::npos) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    double t, tx, ty, tz, qw, qx, qy, qz;
    if (!(row >> t >> tx >> ty >> tz >> qw >> qx >> qy >> qz))
      throw DataError(path + ": malformed pose on line " + std::to_string(lineno));
    Eigen::Quaterniond q(qw, qx, qy, qz);
    if (!(q.norm() > 0)) throw DataError(path + ": zero quaternion on line " + std::to_string(lineno));
    out.push_back({q.normalized().toRotationMatrix(), Vector3d(tx, ty, tz)});
  }
  return out;
}

nlohmann::json to_json(const ScenarioResult& r) {
  return {{"id", r.id},
          {"passed", r.passed},
          {"average_reward", r.average_reward},
          {"termination", r.termination},
          {"episode_length", r.episode_length}};
}

ScenarioResult scenario_result_from_json(const nlohmann::json& j) {
  try {
    ScenarioResult r{j.at("id").get<std::string>(), j.at("passed").get<bool>(),
                     j.at("average_reward").get<double>(), j.at("termination").get<std::string>(),
                     j.at("episode_length").get<std::size_t>()};
    if (r.passed && r.termination != "horizon")
      throw DataError("scenario result '" + r.id + "': passed but terminated by " + r.termination);
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("scenario result: ") + e.what());
  }
}

double scenario_pass_rate(const std::vector<ScenarioResult>& results) {
  if (results.empty()) throw std::invalid_argument("scenario_pass_rate: no results");
  const auto passed = std::count_if(results.begin(), results.end(), [](const auto& r) { return r.passed; });
  return double(passed) / double(results.size());
}

std::vector<HistogramBin> reward_histogram(const std::vector<ScenarioResult>& results, std::size_t n_bins) {
  if (results.empty()) throw std::invalid_argument("reward_histogram: no results");
  if (n_bins < 1) throw std::invalid_argument("reward_histogram: n_bins must be >= 1");
  const auto [mn, mx] = std::minmax_element(results.begin(), results.end(), [](const auto& a, const auto& b) {
    return a.average_reward < b.average_reward;
  });
  const double lo = mn->average_reward, hi = mx->average_reward;
  if (!(hi > lo)) return {{lo, hi, results.size()}};
  const double width = (hi - lo) / double(n_bins);
  std::vector<HistogramBin> bins(n_bins);
  for (std::size_t b = 0; b < n_bins; ++b) {
    bins[b].lo = lo + double(b) * width;
    bins[b].hi = b + 1 == n_bins ? hi : lo + double(b + 1) * width;
  }
  for (const auto& r : results) {
    auto b = std::size_t((r.average_reward - lo) / width);
    bins[std::min(b, n_bins - 1)].count++;
  }
  return bins;
}

std::string histogram_to_csv(const std::vector<HistogramBin>& bins) {
  std::ostringstream out;
  out.precision(17);
  out << "bin_lo,bin_hi,count\n";
  for (const auto& b : bins) out << b.lo << ',' << b.hi << ',' << b.count << '\n';
  return out.str();
}

nlohmann::json batch_report(const std::vector<ScenarioResult>& results) {
  nlohmann::json arr = nlohmann::json::array();
  double sum = 0;
  for (const auto& r : results) {
    arr.push_back(to_json(r));
    sum += r.average_reward;
  }
  return {{"results", arr},
          {"summary",
           {{"spr", results.empty() ? 0.0 : scenario_pass_rate(results)},
            {"mean_reward", results.empty() ? 0.0 : sum / double(results.size())}}}};
}

}  // namespace occunav
