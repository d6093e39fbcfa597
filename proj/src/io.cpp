#include "occunav/io.hpp"

#include <fstream>
#include <sstream>

namespace occunav {

namespace fs = std::filesystem;
using nlohmann::json;

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
}

json load_json(const fs::path& path) {
  const std::string text = read_text(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw DataError("malformed JSON in '" + path.string() + "': " + e.what());
  }
}

json rig_to_json(const CameraRig& rig) {
  json cams = json::array();
  for (const auto& cam : rig.cameras()) {
    const auto& k = cam.intrinsics;
    json rot = json::array();
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) rot.push_back(cam.pose.rotation(r, c));
    cams.push_back({{"name", cam.name},
                    {"intrinsics",
                     {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy},
                      {"width", k.width}, {"height", k.height}}},
                    {"rotation", rot},
                    {"translation",
                     {cam.pose.translation.x(), cam.pose.translation.y(),
                      cam.pose.translation.z()}}});
  }
  return {{"convention", "camera-to-ego"},
          {"reference_index", rig.reference_index()},
          {"cameras", cams}};
}

CameraRig rig_from_json(const json& j) {
  try {
    if (j.contains("convention") && j.at("convention") != "camera-to-ego")
      throw DataError("rig: unsupported extrinsics convention '" +
                      j.at("convention").get<std::string>() + "'");
    std::vector<Camera> cams;
    for (const auto& jc : j.at("cameras")) {
      Camera cam;
      cam.name = jc.at("name").get<std::string>();
      const auto& ji = jc.at("intrinsics");
      cam.intrinsics = {ji.at("fx").get<double>(), ji.at("fy").get<double>(),
                        ji.at("cx").get<double>(), ji.at("cy").get<double>(),
                        ji.at("width").get<int>(), ji.at("height").get<int>()};
      const auto rot = jc.at("rotation").get<std::vector<double>>();
      const auto tr = jc.at("translation").get<std::vector<double>>();
      if (rot.size() != 9 || tr.size() != 3)
        throw DataError("rig: camera '" + cam.name + "' needs 9 rotation and 3 translation values");
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) cam.pose.rotation(r, c) = rot[3 * r + c];
      cam.pose.translation = Vector3d(tr[0], tr[1], tr[2]);
      cams.push_back(std::move(cam));
    }
    return CameraRig(std::move(cams), j.value("reference_index", std::size_t{0}));
  } catch (const json::exception& e) {
    throw DataError(std::string("rig: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
}

CameraRig load_rig(const fs::path& path) { return rig_from_json(load_json(path)); }

void save_rig(const CameraRig& rig, const fs::path& path) {
  write_text(path, rig_to_json(rig).dump(2) + "\n");
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, sep)) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  return out;
}

bool parse_bool(const std::string& s) {
  if (s == "1" || s == "true") return true;
  if (s == "0" || s == "false" || s.empty()) return false;
  throw DataError("trajectory: bad reverse flag '" + s + "'");
}

double parse_double(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError("trajectory: bad number '" + s + "' on line " + std::to_string(line));
  }
}

Trajectory make_trajectory(std::vector<EgoPose> poses, double rate_hz) {
  try {
    return Trajectory(std::move(poses), rate_hz);
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
}

}  // namespace

Trajectory trajectory_from_csv(const std::string& text, double rate_hz) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DataError("trajectory: empty CSV");
  const auto header = split(line, ',');
  const std::vector<std::string> expected{"t", "x", "y", "yaw", "speed", "reverse"};
  if (header != expected)
    throw DataError("trajectory: expected header 't,x,y,yaw,speed,reverse'");
  std::vector<EgoPose> poses;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split(line, ',');
    if (cells.size() != 6)
      throw DataError("trajectory: line " + std::to_string(lineno) + " has " +
                      std::to_string(cells.size()) + " fields");
    EgoPose p;
    p.t = parse_double(cells[0], lineno);
    p.x = parse_double(cells[1], lineno);
    p.y = parse_double(cells[2], lineno);
    p.yaw = parse_double(cells[3], lineno);
    p.speed = parse_double(cells[4], lineno);
    p.reverse = parse_bool(cells[5]);
    poses.push_back(p);
  }
  return make_trajectory(std::move(poses), rate_hz);
}

std::string trajectory_to_csv(const Trajectory& traj) {
  std::ostringstream out;
  out.precision(17);
  out << "t,x,y,yaw,speed,reverse\n";
  for (const auto& p : traj.poses())
    out << p.t << ',' << p.x << ',' << p.y << ',' << p.yaw << ',' << p.speed << ','
        << (p.reverse ? 1 : 0) << '\n';
  return out.str();
}

Trajectory read_trajectory(const fs::path& path, double rate_hz) {
  const std::string text = read_text(path);
  const auto ext = path.extension();
  if (ext != ".jsonl" && ext != ".ndjson") return trajectory_from_csv(text, rate_hz);

  std::vector<EgoPose> poses;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \r\t") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      poses.push_back({j.at("t").get<double>(), j.at("x").get<double>(),
                       j.at("y").get<double>(), j.at("yaw").get<double>(),
                       j.at("speed").get<double>(), j.value("reverse", false)});
    } catch (const json::exception& e) {
      throw DataError("trajectory: " + path.string() + ": " + e.what());
    }
  }
  return make_trajectory(std::move(poses), rate_hz);
}

void write_trajectory(const Trajectory& traj, const fs::path& path) {
  const auto ext = path.extension().string();
  if (ext != ".jsonl" && ext != ".ndjson") return write_text(path, trajectory_to_csv(traj));
  std::string text;
  for (const auto& p : traj.poses())
    text += json{{"t", p.t}, {"x", p.x}, {"y", p.y}, {"yaw", p.yaw}, {"speed", p.speed}, {"reverse", p.reverse}}.dump() +
            "\n";
  write_text(path, text);
}

}  // namespace occunav
