#include "aaa/volume.hpp"

#include <algorithm>
#include <cmath>

namespace aaa::volume {

bool Grid::is_isotropic(double rel_tol) const {
  const double s = spacing.minCoeff();
  return (spacing.maxCoeff() - s) <= rel_tol * s;
}

bool Grid::same_geometry(const Grid& other) const {
  return dims == other.dims && (spacing - other.spacing).cwiseAbs().maxCoeff() <= 1e-9 &&
         (origin - other.origin).cwiseAbs().maxCoeff() <= 1e-9;
}

void Grid::validate() const {
  for (int d = 0; d < 3; ++d) {
    if (dims[d] <= 0) throw Error("grid dimension " + std::to_string(d) + " is not positive");
    if (!(spacing[d] > 0.0) || !std::isfinite(spacing[d]))
      throw Error("grid spacing " + std::to_string(d) + " is not strictly positive");
    if (!std::isfinite(origin[d])) throw Error("grid origin is not finite");
  }
}

LabelVolume::LabelVolume(Grid grid, std::vector<std::uint8_t> labels)
    : grid_(std::move(grid)), labels_(std::move(labels)) {
  grid_.validate();
  if (labels_.size() != grid_.voxel_count())
    throw Error("label count " + std::to_string(labels_.size()) + " does not match dims product " +
                std::to_string(grid_.voxel_count()));
  for (std::size_t n = 0; n < labels_.size(); ++n) {
    if (labels_[n] > kMaxLabel)
      throw Error("unknown label value " + std::to_string(labels_[n]) + " at voxel " +
                  std::to_string(n));
  }
}

std::size_t LabelVolume::count(Label label) const {
  const auto v = static_cast<std::uint8_t>(label);
  return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), v));
}

BinaryMask::BinaryMask(Grid grid) : grid_(std::move(grid)) {
  grid_.validate();
  values_.assign(grid_.voxel_count(), 0);
}

BinaryMask::BinaryMask(Grid grid, std::vector<std::uint8_t> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  grid_.validate();
  if (values_.size() != grid_.voxel_count())
    throw Error("mask value count does not match dims product");
  for (auto& v : values_) v = v ? 1 : 0;
}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(values_.begin(), values_.end(), std::uint8_t{1}));
}

Connectivity connectivity_from_int(int n) {
  switch (n) {
    case 6: return Connectivity::Six;
    case 18: return Connectivity::Eighteen;
    case 26: return Connectivity::TwentySix;
    default: throw Error("connectivity must be 6, 18 or 26, got " + std::to_string(n));
  }
}

void CleaningConfig::validate() const {
  if (roi_z_range && roi_z_range->first > roi_z_range->second)
    throw Error("roi_z_range is empty");
  if (!(smooth_threshold > 0.0 && smooth_threshold < 1.0))
    throw Error("smooth_threshold must lie in (0,1)");
  if (smooth_kernel_radius_mm < 0.0 || opening_radius_mm < 0.0 || gaussian_sigma < 0.0)
    throw Error("cleaning radii must be non-negative");
}

LabelVolume crop_roi(const LabelVolume& volume, std::pair<int, int> z_range) {
  const Grid& g = volume.grid();
  const auto [lo, hi] = z_range;
  if (lo > hi) throw Error("crop range [" + std::to_string(lo) + "," + std::to_string(hi) + "] is empty");
  if (lo < 0 || hi >= g.dims[2])
    throw Error("crop range [" + std::to_string(lo) + "," + std::to_string(hi) +
                "] outside 0.." + std::to_string(g.dims[2] - 1));
  Grid out = g;
  out.dims[2] = hi - lo + 1;
  out.origin.z() += lo * g.spacing.z();
  const std::size_t slice = static_cast<std::size_t>(g.dims[0]) * g.dims[1];
  const auto first = volume.labels().begin() + static_cast<std::ptrdiff_t>(lo * slice);
  std::vector<std::uint8_t> labels(first, first + static_cast<std::ptrdiff_t>(out.dims[2] * slice));
  return LabelVolume(out, std::move(labels));
}

BinaryMask merge_labels(const LabelVolume& volume, const std::set<int>& keep) {
  std::array<std::uint8_t, kMaxLabel + 1> lut{};
  for (int label : keep) {
    if (label < 0 || label > kMaxLabel)
      throw Error("merge_labels: label " + std::to_string(label) + " is not a declared label");
    lut[label] = 1;
  }
  std::vector<std::uint8_t> values(volume.labels().size());
  std::transform(volume.labels().begin(), volume.labels().end(), values.begin(),
                 [&](std::uint8_t l) { return lut[l]; });
  return BinaryMask(volume.grid(), std::move(values));
}

BinaryMask resample_isotropic(const BinaryMask& mask) {
  const Grid& g = mask.grid();
  if (g.is_isotropic()) return mask;
  const double s = g.spacing.minCoeff();
  Grid out;
  out.spacing = Vec3::Constant(s);
  out.origin = g.origin;
  std::array<std::vector<int>, 3> source;
  for (int d = 0; d < 3; ++d) {
    // Origin is kept; the output lattice spans the same first-to-last centre
    // extent, so the physical extent changes by less than one voxel.
    const double span = (g.dims[d] - 1) * g.spacing[d];
    out.dims[d] = static_cast<int>(std::lround(span / s)) + 1;
    source[d].resize(out.dims[d]);
    for (int n = 0; n < out.dims[d]; ++n) {
      const double x = n * s / g.spacing[d];
      source[d][n] = std::clamp(static_cast<int>(std::floor(x + 0.5)), 0, g.dims[d] - 1);
    }
  }
  BinaryMask result(out);
  for (int k = 0; k < out.dims[2]; ++k)
    for (int j = 0; j < out.dims[1]; ++j)
      for (int i = 0; i < out.dims[0]; ++i)
        if (mask.at(source[0][i], source[1][j], source[2][k])) result.set(i, j, k, true);
  return result;
}

}  // namespace aaa::volume
