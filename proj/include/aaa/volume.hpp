#pragma once

#include "aaa/common.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace aaa::volume {

/// Tissue labels produced by the upstream segmenter.
enum class Label : std::uint8_t {
  Background = 0,
  Lumen = 1,
  WallIlt = 2,
  Calcification = 3,
};

inline constexpr int kMaxLabel = 3;

/// Voxel lattice geometry shared by label volumes and masks. Voxel (i,j,k)
/// has its centre at origin + (i,j,k) * spacing.
struct Grid {
  std::array<int, 3> dims{0, 0, 0};
  Vec3 spacing{1.0, 1.0, 1.0};
  Vec3 origin{0.0, 0.0, 0.0};

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * dims[1] + j) * dims[0] + i;
  }
  bool contains(int i, int j, int k) const {
    return i >= 0 && j >= 0 && k >= 0 && i < dims[0] && j < dims[1] && k < dims[2];
  }
  Vec3 center(int i, int j, int k) const {
    return origin + Vec3(i * spacing.x(), j * spacing.y(), k * spacing.z());
  }
  bool is_isotropic(double rel_tol = 1e-9) const;
  /// Same dims, spacing and origin (to 1e-9 mm).
  bool same_geometry(const Grid& other) const;
  /// Throws unless dims are positive and spacing strictly positive.
  void validate() const;
};

class LabelVolume {
 public:
  LabelVolume() = default;
  /// Validates the grid and every label value.
  LabelVolume(Grid grid, std::vector<std::uint8_t> labels);

  const Grid& grid() const { return grid_; }
  const std::vector<std::uint8_t>& labels() const { return labels_; }
  std::uint8_t at(int i, int j, int k) const { return labels_[grid_.index(i, j, k)]; }
  std::size_t count(Label label) const;

 private:
  Grid grid_;
  std::vector<std::uint8_t> labels_;
};

class BinaryMask {
 public:
  BinaryMask() = default;
  /// All-background mask on `grid`.
  explicit BinaryMask(Grid grid);
  BinaryMask(Grid grid, std::vector<std::uint8_t> values);

  const Grid& grid() const { return grid_; }
  const std::vector<std::uint8_t>& values() const { return values_; }
  std::vector<std::uint8_t>& values() { return values_; }
  bool at(int i, int j, int k) const { return values_[grid_.index(i, j, k)] != 0; }
  void set(int i, int j, int k, bool v) { values_[grid_.index(i, j, k)] = v ? 1 : 0; }
  std::size_t count() const;
  bool empty() const { return count() == 0; }

  friend bool operator==(const BinaryMask& a, const BinaryMask& b) {
    return a.grid_.same_geometry(b.grid_) && a.values_ == b.values_;
  }

 private:
  Grid grid_;
  std::vector<std::uint8_t> values_;
};

/// Voxel adjacency for component labelling.
enum class Connectivity { Six = 6, Eighteen = 18, TwentySix = 26 };

Connectivity connectivity_from_int(int n);

struct CleaningConfig {
  /// Inclusive slice range; unset means the full volume.
  std::optional<std::pair<int, int>> roi_z_range;
  double smooth_kernel_radius_mm = 1.5;
  double smooth_threshold = 0.5;
  double opening_radius_mm = 2.0;
  double gaussian_sigma = 0.2;
  Connectivity connectivity = Connectivity::TwentySix;

  void validate() const;
};

// ---------------------------------------------------------------------------
// File IO (NRRD and MetaImage, little-endian, 8/16-bit integer voxels)

LabelVolume load_volume(const std::filesystem::path& path);
/// Writes a label volume as uint8. Format chosen from the extension
/// (.nrrd, .mha, .mhd).
void save_volume(const LabelVolume& volume, const std::filesystem::path& path);
BinaryMask load_mask(const std::filesystem::path& path);
void save_mask(const BinaryMask& mask, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Cleaning operations. All are pure; metadata is carried through unchanged
// except where stated.

/// Keeps slices z_lo..z_hi (inclusive) and shifts the origin accordingly.
LabelVolume crop_roi(const LabelVolume& volume, std::pair<int, int> z_range);

BinaryMask merge_labels(const LabelVolume& volume, const std::set<int>& keep);

/// Largest connected foreground component. Equal sizes resolve to the
/// component whose first voxel has the lowest linear index.
BinaryMask largest_component(const BinaryMask& mask, Connectivity connectivity);

/// Nearest-neighbour resampling to spacing min(spacing) on every axis.
BinaryMask resample_isotropic(const BinaryMask& mask);

/// Normalised box blur of the indicator followed by `value > threshold`.
BinaryMask convolution_smooth(const BinaryMask& mask, double kernel_radius_mm,
                              double threshold);

/// Fills background regions not 6-connected to the volume border.
BinaryMask fill_holes(const BinaryMask& mask);

/// Morphological opening with a ball of the given radius.
BinaryMask remove_extrusions(const BinaryMask& mask, double opening_radius_mm);

/// Gaussian blur of the indicator (sigma in mm) thresholded at 0.5.
BinaryMask gaussian_smooth_binary(const BinaryMask& mask, double sigma_mm);

/// Ball dilation / erosion, radius in mm. Voxels outside the grid take the
/// value of the nearest voxel inside it.
BinaryMask dilate(const BinaryMask& mask, double radius_mm);
BinaryMask erode(const BinaryMask& mask, double radius_mm);

struct CleanedMasks {
  BinaryMask aaa;
  BinaryMask lumen;
};

/// The full post-processing chain for segmenter output. Errors are
/// rethrown as StageError naming the failing step.
CleanedMasks clean_pipeline(const LabelVolume& volume, const CleaningConfig& config);

}  // namespace aaa::volume
