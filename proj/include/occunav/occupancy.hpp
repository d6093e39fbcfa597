#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "occunav/geometry.hpp"

namespace occunav {

using Label = std::uint16_t;

/// Ordered class list with the roles the reward rules need.
class SemanticTaxonomy {
 public:
  SemanticTaxonomy() = default;
  SemanticTaxonomy(std::vector<std::string> labels, const std::vector<std::string>& obstacles,
                   const std::string& drivable, const std::string& free);

  /// NuScenes-Occupancy classes with `free` at index 0.
  static SemanticTaxonomy nuscenes_occupancy();

  std::size_t size() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::string& name(Label l) const { return labels_.at(l); }
  Label index_of(const std::string& name) const;
  bool is_obstacle(Label l) const { return obstacle_.at(l); }
  Label drivable() const { return drivable_; }
  Label free() const { return free_; }
  std::vector<Label> obstacle_labels() const;

  bool operator==(const SemanticTaxonomy&) const = default;

 private:
  std::vector<std::string> labels_;
  std::vector<bool> obstacle_;
  Label drivable_ = 0;
  Label free_ = 0;
};

/// Axis-aligned voxel lattice. Voxel (ix, iy, iz) spans the half-open box
/// [origin + i * voxel_size, origin + (i + 1) * voxel_size); storage is
/// x-major: index = (ix * ny + iy) * nz + iz.
struct GridGeometry {
  Vector3d origin{Vector3d::Zero()};
  double voxel_size = 0.2;
  std::array<std::uint32_t, 3> dims{1, 1, 1};

  /// +/-51.2 m in x and y, -5 m to 3 m in z, 0.2 m voxels (512 x 512 x 40).
  static GridGeometry nuscenes_occupancy();

  std::size_t voxel_count() const { return std::size_t(dims[0]) * dims[1] * dims[2]; }
  std::size_t index(std::uint32_t ix, std::uint32_t iy, std::uint32_t iz) const {
    return (std::size_t(ix) * dims[1] + iy) * dims[2] + iz;
  }
  std::array<std::uint32_t, 3> coords(std::size_t index) const;
  std::optional<std::size_t> voxel_of(const Vector3d& p) const;
  Vector3d center(std::uint32_t ix, std::uint32_t iy, std::uint32_t iz) const;
  Vector3d center(std::size_t index) const;
  Vector3d max_corner() const;

  void validate() const;
  bool operator==(const GridGeometry&) const = default;
};

struct OrientedBox {
  Vector3d center{Vector3d::Zero()};
  Matrix3d rotation{Matrix3d::Identity()};  // box-to-world
  Vector3d half_extents{Vector3d::Ones()};

  static OrientedBox axis_aligned(const Vector3d& lo, const Vector3d& hi);
  /// Upright box rotated by `yaw` about +z.
  static OrientedBox upright(const Vector3d& center, double yaw, const Vector3d& size);

  bool contains(const Vector3d& p) const;
  Vector3d aabb_min() const;
  Vector3d aabb_max() const;
};

class SemanticOccupancyGrid {
 public:
  SemanticOccupancyGrid() = default;
  /// All voxels start as the taxonomy's free label.
  SemanticOccupancyGrid(GridGeometry geometry, SemanticTaxonomy taxonomy);
  SemanticOccupancyGrid(GridGeometry geometry, SemanticTaxonomy taxonomy,
                        std::vector<Label> labels);

  const GridGeometry& geometry() const { return geometry_; }
  const SemanticTaxonomy& taxonomy() const { return taxonomy_; }
  const std::vector<Label>& labels() const { return labels_; }

  Label at(std::size_t index) const { return labels_[index]; }
  Label at(std::uint32_t ix, std::uint32_t iy, std::uint32_t iz) const {
    return labels_[geometry_.index(ix, iy, iz)];
  }
  void set(std::size_t index, Label l);
  void set(std::uint32_t ix, std::uint32_t iy, std::uint32_t iz, Label l) {
    set(geometry_.index(ix, iy, iz), l);
  }
  /// Labels every voxel whose centre lies inside `box`.
  void fill(const OrientedBox& box, Label l);

  /// Label of the voxel containing `p`; free outside the grid or for
  /// non-finite points.
  Label label_at(const Vector3d& p) const;

  std::size_t occupied_count() const;

  bool operator==(const SemanticOccupancyGrid&) const = default;

 private:
  GridGeometry geometry_;
  SemanticTaxonomy taxonomy_;
  std::vector<Label> labels_;
};

/// Counts voxels whose centres lie inside `box` and whose label is in `classes`.
std::size_t query_box(const SemanticOccupancyGrid& grid, const OrientedBox& box,
                      std::span<const Label> classes);

/// Time-ordered grids sharing one geometry and taxonomy.
class OccupancySequence {
 public:
  OccupancySequence() = default;
  OccupancySequence(std::vector<SemanticOccupancyGrid> grids, std::vector<double> timestamps);

  std::size_t size() const { return grids_.size(); }
  bool empty() const { return grids_.empty(); }
  const SemanticOccupancyGrid& grid(std::size_t i) const { return grids_.at(i); }
  const std::vector<SemanticOccupancyGrid>& grids() const { return grids_; }
  const std::vector<double>& timestamps() const { return timestamps_; }
  double start() const { return timestamps_.front(); }
  double end() const { return timestamps_.back(); }

  /// Index of the grid with the nearest timestamp; ties go to the earlier grid.
  std::size_t nearest(double t) const;

 private:
  std::vector<SemanticOccupancyGrid> grids_;
  std::vector<double> timestamps_;
};

using DepthImage = Eigen::Array<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using LabelImage = Eigen::Array<Label, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Pixel-aligned metric depth (range along the pixel ray, 0 = invalid) and
/// semantic labels for one view.
struct ViewImages {
  DepthImage depth;
  LabelImage labels;
};

/// Unprojects every valid pixel along its camera ray and lets each voxel
/// take the majority label of the points falling into it (ties to the lower
/// taxonomy index). Images may be sampled at any resolution; pixel centres
/// map onto the intrinsics' image plane.
SemanticOccupancyGrid fuse_from_panorama(const CameraRig& rig, const EgoPose& ego,
                                         std::span<const ViewImages> views,
                                         const GridGeometry& geometry,
                                         const SemanticTaxonomy& taxonomy);

struct RenderOptions {
  /// Ray-march stop distance in metres; the grid diagonal when unset.
  std::optional<double> max_range;
  /// When set, receives one flag per voxel marking first-hit voxels.
  std::vector<std::uint8_t>* hit_voxels = nullptr;
};

/// Ray-marches every pixel at voxel_size / 2 steps and reports the first
/// non-free voxel.
std::vector<ViewImages> render_views(const SemanticOccupancyGrid& grid, const CameraRig& rig,
                                     const EgoPose& ego, int h, int w,
                                     const RenderOptions& options = {});

struct OccupancyScores {
  double iou = 0;   // binary occupied-vs-free
  double miou = 0;  // mean over classes present in pred or gt, free excluded
  std::vector<std::optional<double>> per_class;  // nullopt: absent from both
};

/// IoU / mIoU. When `mask` is given, only voxels with a non-zero flag count.
/// An empty union scores 1.
OccupancyScores iou_miou(const SemanticOccupancyGrid& pred, const SemanticOccupancyGrid& gt,
                         std::span<const std::uint8_t> mask = {});

// Grid binary format `ONWM-OG1`:
//   magic, origin f32x3, voxel_size f32, dims u32x3,
//   u32 label count, then per label {u32 byte length, UTF-8 name, u8 role}
//   with role 0 = plain, 1 = obstacle, 2 = drivable, 3 = free,
//   then (label u16, run u32) pairs covering the x-major label array.
std::vector<std::uint8_t> encode_grid(const SemanticOccupancyGrid& grid);
SemanticOccupancyGrid decode_grid(const std::vector<std::uint8_t>& bytes);
void write_grid(const SemanticOccupancyGrid& grid, const std::filesystem::path& path);
SemanticOccupancyGrid read_grid(const std::filesystem::path& path);

/// Sequence directory: `sequence.json` ({"frames": [{"t", "file"}]}) plus one
/// grid file per frame.
void write_sequence(const OccupancySequence& seq, const std::filesystem::path& dir);
OccupancySequence read_sequence(const std::filesystem::path& dir);

// Panorama bundle `ONWM-PV1`: magic, u32 view count, then per view u32 h, u32 w,
// float32 depth[h * w], u16 labels[h * w], row-major.
void write_panorama(std::span<const ViewImages> views, const std::filesystem::path& path);
std::vector<ViewImages> read_panorama(const std::filesystem::path& path);

}  // namespace occunav
