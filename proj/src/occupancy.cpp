#include "occunav/occupancy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <unordered_map>

#include "binary.hpp"
#include "occunav/io.hpp"

namespace occunav {

// ---- taxonomy ---------------------------------------------------------------

SemanticTaxonomy::SemanticTaxonomy(std::vector<std::string> labels,
                                   const std::vector<std::string>& obstacles,
                                   const std::string& drivable, const std::string& free)
    : labels_(std::move(labels)), obstacle_(labels_.size(), false) {
  if (labels_.empty() || labels_.size() > std::numeric_limits<Label>::max())
    throw std::invalid_argument("taxonomy: label count out of range");
  if (std::set<std::string>(labels_.begin(), labels_.end()).size() != labels_.size())
    throw std::invalid_argument("taxonomy: label names must be unique");
  drivable_ = index_of(drivable);
  free_ = index_of(free);
  if (drivable_ == free_) throw std::invalid_argument("taxonomy: drivable and free labels coincide");
  for (const auto& o : obstacles) {
    const Label l = index_of(o);
    if (l == drivable_ || l == free_)
      throw std::invalid_argument("taxonomy: drivable/free label cannot be an obstacle");
    obstacle_[l] = true;
  }
}

SemanticTaxonomy SemanticTaxonomy::nuscenes_occupancy() {
  return SemanticTaxonomy(
      {"free", "barrier", "bicycle", "bus", "car", "construction vehicle", "motorcycle",
       "pedestrian", "traffic cone", "trailer", "truck", "drivable surface", "other flat",
       "sidewalk", "terrain", "manmade", "vegetation"},
      {"barrier", "bicycle", "bus", "car", "construction vehicle", "motorcycle", "pedestrian",
       "traffic cone", "trailer", "truck", "manmade", "vegetation"},
      "drivable surface", "free");
}

Label SemanticTaxonomy::index_of(const std::string& name) const {
  const auto it = std::find(labels_.begin(), labels_.end(), name);
  if (it == labels_.end()) throw std::invalid_argument("taxonomy: unknown label '" + name + "'");
  return static_cast<Label>(it - labels_.begin());
}

std::vector<Label> SemanticTaxonomy::obstacle_labels() const {
  std::vector<Label> out;
  for (std::size_t i = 0; i < obstacle_.size(); ++i)
    if (obstacle_[i]) out.push_back(static_cast<Label>(i));
  return out;
}

// ---- geometry ---------------------------------------------------------------

GridGeometry GridGeometry::nuscenes_occupancy() {
  return {Vector3d(-51.2, -51.2, -5.0), 0.2, {512, 512, 40}};
}

void GridGeometry::validate() const {
  if (!(voxel_size > 0) || !std::isfinite(voxel_size))
    throw std::invalid_argument("grid: voxel size must be positive");
  if (dims[0] == 0 || dims[1] == 0 || dims[2] == 0)
    throw std::invalid_argument("grid: dimensions must be positive");
  if (!origin.allFinite()) throw std::invalid_argument("grid: origin must be finite");
}

std::array<std::uint32_t, 3> GridGeometry::coords(std::size_t index) const {
  const auto iz = static_cast<std::uint32_t>(index % dims[2]);
  index /= dims[2];
  const auto iy = static_cast<std::uint32_t>(index % dims[1]);
  return {static_cast<std::uint32_t>(index / dims[1]), iy, iz};
}

std::optional<std::size_t> GridGeometry::voxel_of(const Vector3d& p) const {
  if (!p.allFinite()) return std::nullopt;
  const Eigen::Array3d f = ((p - origin) / voxel_size).array().floor();
  for (int a = 0; a < 3; ++a)
    if (f[a] < 0 || f[a] >= double(dims[a])) return std::nullopt;
  return index(std::uint32_t(f[0]), std::uint32_t(f[1]), std::uint32_t(f[2]));
}

Vector3d GridGeometry::center(std::uint32_t ix, std::uint32_t iy, std::uint32_t iz) const {
  return origin + voxel_size * Vector3d(ix + 0.5, iy + 0.5, iz + 0.5);
}

Vector3d GridGeometry::center(std::size_t i) const {
  const auto c = coords(i);
  return center(c[0], c[1], c[2]);
}

Vector3d GridGeometry::max_corner() const {
  return origin + voxel_size * Vector3d(dims[0], dims[1], dims[2]);
}

// ---- boxes ------------------------------------------------------------------

OrientedBox OrientedBox::axis_aligned(const Vector3d& lo, const Vector3d& hi) {
  return {0.5 * (lo + hi), Matrix3d::Identity(), 0.5 * (hi - lo)};
}

OrientedBox OrientedBox::upright(const Vector3d& center, double yaw, const Vector3d& size) {
  return {center, Pose::rot_z(yaw).rotation, 0.5 * size};
}

bool OrientedBox::contains(const Vector3d& p) const {
  const Vector3d local = rotation.transpose() * (p - center);
  return (local.cwiseAbs().array() <= half_extents.array()).all();
}

Vector3d OrientedBox::aabb_max() const {
  return center + rotation.cwiseAbs() * half_extents;
}

Vector3d OrientedBox::aabb_min() const {
  return center - rotation.cwiseAbs() * half_extents;
}

// ---- grid -------------------------------------------------------------------

SemanticOccupancyGrid::SemanticOccupancyGrid(GridGeometry geometry, SemanticTaxonomy taxonomy)
    : geometry_(geometry), taxonomy_(std::move(taxonomy)) {
  geometry_.validate();
  labels_.assign(geometry_.voxel_count(), taxonomy_.free());
}

SemanticOccupancyGrid::SemanticOccupancyGrid(GridGeometry geometry, SemanticTaxonomy taxonomy,
                                             std::vector<Label> labels)
    : geometry_(geometry), taxonomy_(std::move(taxonomy)), labels_(std::move(labels)) {
  geometry_.validate();
  if (labels_.size() != geometry_.voxel_count())
    throw std::invalid_argument("grid: label array length does not match dimensions");
  for (Label l : labels_)
    if (l >= taxonomy_.size()) throw std::invalid_argument("grid: label index out of taxonomy range");
}

void SemanticOccupancyGrid::set(std::size_t index, Label l) {
  if (l >= taxonomy_.size()) throw std::invalid_argument("grid: label index out of taxonomy range");
  labels_.at(index) = l;
}

namespace {

// Inclusive voxel index range whose centres may fall inside [lo, hi].
bool center_range(const GridGeometry& g, const Vector3d& lo, const Vector3d& hi,
                  std::array<std::uint32_t, 3>& first, std::array<std::uint32_t, 3>& last) {
  for (int a = 0; a < 3; ++a) {
    const double f = std::ceil((lo[a] - g.origin[a]) / g.voxel_size - 0.5);
    const double l = std::floor((hi[a] - g.origin[a]) / g.voxel_size - 0.5);
    const double fc = std::max(f - 1.0, 0.0);
    const double lc = std::min(l + 1.0, double(g.dims[a]) - 1.0);
    if (fc > lc) return false;
    first[a] = std::uint32_t(fc);
    last[a] = std::uint32_t(lc);
  }
  return true;
}

template <typename Fn>
void for_each_center_in(const GridGeometry& g, const OrientedBox& box, Fn&& fn) {
  std::array<std::uint32_t, 3> first{}, last{};
  if (!center_range(g, box.aabb_min(), box.aabb_max(), first, last)) return;
  for (std::uint32_t ix = first[0]; ix <= last[0]; ++ix)
    for (std::uint32_t iy = first[1]; iy <= last[1]; ++iy)
      for (std::uint32_t iz = first[2]; iz <= last[2]; ++iz)
        if (box.contains(g.center(ix, iy, iz))) fn(g.index(ix, iy, iz));
}

}  // namespace

void SemanticOccupancyGrid::fill(const OrientedBox& box, Label l) {
  if (l >= taxonomy_.size()) throw std::invalid_argument("grid: label index out of taxonomy range");
  for_each_center_in(geometry_, box, [&](std::size_t i) { labels_[i] = l; });
}

Label SemanticOccupancyGrid::label_at(const Vector3d& p) const {
  const auto i = geometry_.voxel_of(p);
  return i ? labels_[*i] : taxonomy_.free();
}

std::size_t SemanticOccupancyGrid::occupied_count() const {
  return std::size_t(std::count_if(labels_.begin(), labels_.end(),
                                   [&](Label l) { return l != taxonomy_.free(); }));
}

std::size_t query_box(const SemanticOccupancyGrid& grid, const OrientedBox& box,
                      std::span<const Label> classes) {
  if (!(box.half_extents.array() > 0).all())
    throw std::invalid_argument("query_box: box extents must be positive");
  std::vector<bool> wanted(grid.taxonomy().size(), false);
  for (Label c : classes)
    if (c < wanted.size()) wanted[c] = true;
  std::size_t count = 0;
  for_each_center_in(grid.geometry(), box, [&](std::size_t i) {
    if (wanted[grid.at(i)]) ++count;
  });
  return count;
}

// ---- sequences --------------------------------------------------------------

OccupancySequence::OccupancySequence(std::vector<SemanticOccupancyGrid> grids,
                                     std::vector<double> timestamps)
    : grids_(std::move(grids)), timestamps_(std::move(timestamps)) {
  if (grids_.size() != timestamps_.size())
    throw std::invalid_argument("occupancy sequence: grid and timestamp counts differ");
  if (grids_.empty()) throw std::invalid_argument("occupancy sequence: empty");
  for (std::size_t i = 1; i < grids_.size(); ++i) {
    if (!(timestamps_[i] > timestamps_[i - 1]))
      throw std::invalid_argument("occupancy sequence: timestamps must be strictly increasing");
    if (!(grids_[i].geometry() == grids_[0].geometry()) ||
        !(grids_[i].taxonomy() == grids_[0].taxonomy()))
      throw std::invalid_argument("occupancy sequence: frames must share geometry and taxonomy");
  }
}

std::size_t OccupancySequence::nearest(double t) const {
  const auto it = std::lower_bound(timestamps_.begin(), timestamps_.end(), t);
  if (it == timestamps_.begin()) return 0;
  if (it == timestamps_.end()) return timestamps_.size() - 1;
  const auto hi = std::size_t(it - timestamps_.begin());
  return (t - timestamps_[hi - 1] <= timestamps_[hi] - t) ? hi - 1 : hi;
}

// ---- fusion and rendering ---------------------------------------------------

SemanticOccupancyGrid fuse_from_panorama(const CameraRig& rig, const EgoPose& ego,
                                         std::span<const ViewImages> views,
                                         const GridGeometry& geometry,
                                         const SemanticTaxonomy& taxonomy) {
  if (views.size() != rig.size())
    throw std::invalid_argument("fuse: " + std::to_string(views.size()) + " views for a rig of " +
                                std::to_string(rig.size()) + " cameras");
  SemanticOccupancyGrid grid(geometry, taxonomy);
  const auto cams = rig_world_cameras(rig, ego);
  const std::size_t n_labels = taxonomy.size();

  // Integer votes are order-independent, so the result is schedule-free.
  std::unordered_map<std::size_t, std::vector<std::uint32_t>> votes;
  for (std::size_t v = 0; v < views.size(); ++v) {
    const auto& img = views[v];
    if (img.depth.rows() != img.labels.rows() || img.depth.cols() != img.labels.cols())
      throw std::invalid_argument("fuse: depth and semantic maps of view " + std::to_string(v) +
                                  " are not pixel-aligned");
    const auto& [intr, pose] = cams[v];
    const int h = int(img.depth.rows()), w = int(img.depth.cols());
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c) {
        const float depth = img.depth(r, c);
        const Label label = img.labels(r, c);
        if (!(depth > 0) || !std::isfinite(depth) || label == taxonomy.free()) continue;
        if (label >= n_labels) throw std::invalid_argument("fuse: semantic label out of taxonomy range");
        const auto px = pixel_center(intr, h, w, r, c);
        const Vector3d p = pose.translation + double(depth) * pixel_direction(intr, pose, px.x(), px.y());
        const auto voxel = geometry.voxel_of(p);
        if (!voxel) continue;
        auto& tally = votes[*voxel];
        if (tally.empty()) tally.assign(n_labels, 0);
        ++tally[label];
      }
  }
  for (const auto& [voxel, tally] : votes) {
    // max_element returns the first maximum, i.e. the lowest taxonomy index.
    const auto best = std::max_element(tally.begin(), tally.end()) - tally.begin();
    grid.set(voxel, static_cast<Label>(best));
  }
  return grid;
}

namespace {

// Entry/exit distances of a ray through an axis-aligned box.
bool slab_intersect(const Vector3d& o, const Vector3d& d, const Vector3d& lo,
                    const Vector3d& hi, double& t_in, double& t_out) {
  t_in = 0.0;
  t_out = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < 1e-300) {
      if (o[a] < lo[a] || o[a] > hi[a]) return false;
      continue;
    }
    double t0 = (lo[a] - o[a]) / d[a], t1 = (hi[a] - o[a]) / d[a];
    if (t0 > t1) std::swap(t0, t1);
    t_in = std::max(t_in, t0);
    t_out = std::min(t_out, t1);
  }
  return t_in <= t_out;
}

}  // namespace

std::vector<ViewImages> render_views(const SemanticOccupancyGrid& grid, const CameraRig& rig,
                                     const EgoPose& ego, int h, int w,
                                     const RenderOptions& options) {
  if (h < 1 || w < 1) throw std::invalid_argument("render: image extents must be >= 1");
  const auto& g = grid.geometry();
  const Vector3d lo = g.origin, hi = g.max_corner();
  const double max_range = options.max_range.value_or((hi - lo).norm());
  const double step = 0.5 * g.voxel_size;
  const Label free = grid.taxonomy().free();
  if (options.hit_voxels) options.hit_voxels->assign(g.voxel_count(), 0);

  std::vector<ViewImages> out;
  for (const auto& [intr, pose] : rig_world_cameras(rig, ego)) {
    ViewImages img{DepthImage::Zero(h, w), LabelImage::Constant(h, w, free)};
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c) {
        const auto px = pixel_center(intr, h, w, r, c);
        const Vector3d d = pixel_direction(intr, pose, px.x(), px.y());
        double t_in = 0, t_out = 0;
        if (!slab_intersect(pose.translation, d, lo, hi, t_in, t_out)) continue;
        t_out = std::min(t_out, max_range);
        for (double s = t_in + 0.5 * step; s <= t_out; s += step) {
          const auto voxel = g.voxel_of(pose.translation + s * d);
          if (!voxel) continue;
          const Label l = grid.at(*voxel);
          if (l == free) continue;
          img.depth(r, c) = static_cast<float>(s);
          img.labels(r, c) = l;
          if (options.hit_voxels) (*options.hit_voxels)[*voxel] = 1;
          break;
        }
      }
    out.push_back(std::move(img));
  }
  return out;
}

// ---- metrics ----------------------------------------------------------------

OccupancyScores iou_miou(const SemanticOccupancyGrid& pred, const SemanticOccupancyGrid& gt,
                         std::span<const std::uint8_t> mask) {
  if (!(pred.geometry() == gt.geometry()) || !(pred.taxonomy() == gt.taxonomy()))
    throw std::invalid_argument("iou_miou: prediction and ground truth differ in geometry or taxonomy");
  if (!mask.empty() && mask.size() != pred.labels().size())
    throw std::invalid_argument("iou_miou: mask length does not match grid");
  const std::size_t k = pred.taxonomy().size();
  const Label free = pred.taxonomy().free();
  std::vector<std::size_t> inter(k, 0), uni(k, 0);
  std::size_t occ_inter = 0, occ_union = 0;
  for (std::size_t i = 0; i < pred.labels().size(); ++i) {
    if (!mask.empty() && !mask[i]) continue;
    const Label p = pred.at(i), t = gt.at(i);
    const bool po = p != free, to = t != free;
    occ_inter += po && to;
    occ_union += po || to;
    if (p == t) {
      ++inter[p];
      ++uni[p];
    } else {
      ++uni[p];
      ++uni[t];
    }
  }
  OccupancyScores s;
  s.iou = occ_union ? double(occ_inter) / double(occ_union) : 1.0;
  s.per_class.assign(k, std::nullopt);
  double sum = 0;
  std::size_t n = 0;
  for (std::size_t c = 0; c < k; ++c) {
    if (c == free || uni[c] == 0) continue;
    s.per_class[c] = double(inter[c]) / double(uni[c]);
    sum += *s.per_class[c];
    ++n;
  }
  s.miou = n ? sum / double(n) : 1.0;
  return s;
}

// ---- serialization ----------------------------------------------------------

namespace {

constexpr std::string_view kGridMagic = "ONWM-OG1";
constexpr std::string_view kPanoramaMagic = "ONWM-PV1";

enum class Role : std::uint8_t { kPlain = 0, kObstacle = 1, kDrivable = 2, kFree = 3 };

}  // namespace

std::vector<std::uint8_t> encode_grid(const SemanticOccupancyGrid& grid) {
  const auto& g = grid.geometry();
  const auto& tax = grid.taxonomy();
  detail::ByteWriter w;
  w.bytes(kGridMagic);
  for (int a = 0; a < 3; ++a) w.put(static_cast<float>(g.origin[a]));
  w.put(static_cast<float>(g.voxel_size));
  for (auto d : g.dims) w.put(d);
  w.put(static_cast<std::uint32_t>(tax.size()));
  for (std::size_t i = 0; i < tax.size(); ++i) {
    const auto& name = tax.labels()[i];
    w.put(static_cast<std::uint32_t>(name.size()));
    w.bytes(name);
    Role role = Role::kPlain;
    if (i == tax.free()) role = Role::kFree;
    else if (i == tax.drivable()) role = Role::kDrivable;
    else if (tax.is_obstacle(Label(i))) role = Role::kObstacle;
    w.buffer().push_back(static_cast<std::uint8_t>(role));
  }
  const auto& labels = grid.labels();
  for (std::size_t i = 0; i < labels.size();) {
    std::size_t j = i;
    while (j < labels.size() && labels[j] == labels[i] && j - i < 0xFFFFFFFFu) ++j;
    w.put(labels[i]);
    w.put(static_cast<std::uint32_t>(j - i));
    i = j;
  }
  return std::move(w.buffer());
}

SemanticOccupancyGrid decode_grid(const std::vector<std::uint8_t>& bytes) {
  detail::ByteReader r(bytes, "grid");
  r.expect_magic(kGridMagic);
  GridGeometry g;
  for (int a = 0; a < 3; ++a) g.origin[a] = r.get<float>();
  g.voxel_size = r.get<float>();
  for (auto& d : g.dims) d = r.get<std::uint32_t>();
  try {
    g.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("grid: corrupt header: ") + e.what());
  }
  const auto n_labels = r.get<std::uint32_t>();
  if (n_labels == 0 || n_labels > std::numeric_limits<Label>::max())
    throw DataError("grid: corrupt header: label count " + std::to_string(n_labels));
  std::vector<std::string> names;
  std::vector<std::string> obstacles;
  std::string drivable, free;
  for (std::uint32_t i = 0; i < n_labels; ++i) {
    const auto len = r.get<std::uint32_t>();
    names.push_back(r.string(len));
    const auto role = static_cast<Role>(r.get<std::uint8_t>());
    switch (role) {
      case Role::kPlain: break;
      case Role::kObstacle: obstacles.push_back(names.back()); break;
      case Role::kDrivable: drivable = names.back(); break;
      case Role::kFree: free = names.back(); break;
      default: throw DataError("grid: corrupt header: unknown label role");
    }
  }
  SemanticTaxonomy tax;
  try {
    tax = SemanticTaxonomy(names, obstacles, drivable, free);
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("grid: corrupt taxonomy: ") + e.what());
  }

  if (double(g.dims[0]) * g.dims[1] * g.dims[2] > 4.0e9)
    throw DataError("grid: corrupt header: voxel count too large");
  const std::size_t total = g.voxel_count();
  if (r.remaining() % 6 != 0) throw DataError("grid: truncated run-length payload");
  std::vector<Label> labels;
  labels.reserve(std::min<std::size_t>(total, std::size_t{1} << 26));
  while (r.remaining() > 0) {
    const auto label = r.get<Label>("payload");
    const auto run = r.get<std::uint32_t>("payload");
    if (label >= n_labels)
      throw DataError("grid: unknown label index " + std::to_string(label));
    if (run == 0 || run > total - labels.size())
      throw DataError("grid: run lengths do not sum to the voxel count");
    labels.insert(labels.end(), run, label);
  }
  if (labels.size() != total) throw DataError("grid: run lengths do not sum to the voxel count");
  return SemanticOccupancyGrid(g, std::move(tax), std::move(labels));
}

void write_grid(const SemanticOccupancyGrid& grid, const std::filesystem::path& path) {
  detail::write_bytes(path, encode_grid(grid));
}

SemanticOccupancyGrid read_grid(const std::filesystem::path& path) {
  try {
    return decode_grid(detail::read_bytes(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_sequence(const OccupancySequence& seq, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json frames = nlohmann::json::array();
  for (std::size_t i = 0; i < seq.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%05zu.og", i);
    write_grid(seq.grid(i), dir / name);
    frames.push_back({{"t", seq.timestamps()[i]}, {"file", name}});
  }
  write_text(dir / "sequence.json", nlohmann::json{{"frames", frames}}.dump(2) + "\n");
}

OccupancySequence read_sequence(const std::filesystem::path& dir) {
  const auto manifest = load_json(dir / "sequence.json");
  std::vector<SemanticOccupancyGrid> grids;
  std::vector<double> stamps;
  try {
    for (const auto& f : manifest.at("frames")) {
      stamps.push_back(f.at("t").get<double>());
      grids.push_back(read_grid(dir / f.at("file").get<std::string>()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("occupancy sequence '" + dir.string() + "': " + e.what());
  }
  try {
    return OccupancySequence(std::move(grids), std::move(stamps));
  } catch (const std::invalid_argument& e) {
    throw DataError("occupancy sequence '" + dir.string() + "': " + e.what());
  }
}

void write_panorama(std::span<const ViewImages> views, const std::filesystem::path& path) {
  detail::ByteWriter w;
  w.bytes(kPanoramaMagic);
  w.put(static_cast<std::uint32_t>(views.size()));
  for (const auto& v : views) {
    w.put(static_cast<std::uint32_t>(v.depth.rows()));
    w.put(static_cast<std::uint32_t>(v.depth.cols()));
    for (Eigen::Index i = 0; i < v.depth.size(); ++i) w.put(v.depth.data()[i]);
    for (Eigen::Index i = 0; i < v.labels.size(); ++i) w.put(v.labels.data()[i]);
  }
  detail::write_bytes(path, w.buffer());
}

std::vector<ViewImages> read_panorama(const std::filesystem::path& path) {
  const auto bytes = detail::read_bytes(path);
  detail::ByteReader r(bytes, path.string());
  r.expect_magic(kPanoramaMagic);
  const auto n = r.get<std::uint32_t>();
  std::vector<ViewImages> views;
  for (std::uint32_t k = 0; k < n; ++k) {
    const auto h = r.get<std::uint32_t>(), w = r.get<std::uint32_t>();
    r.need(std::size_t(h) * w * 6, "payload");
    ViewImages v{DepthImage(h, w), LabelImage(h, w)};
    for (Eigen::Index i = 0; i < v.depth.size(); ++i) v.depth.data()[i] = r.get<float>("payload");
    for (Eigen::Index i = 0; i < v.labels.size(); ++i) v.labels.data()[i] = r.get<Label>("payload");
    views.push_back(std::move(v));
  }
  if (r.remaining() != 0) throw DataError(path.string() + ": trailing bytes after panorama payload");
  return views;
}

}  // namespace occunav
