#include "aaa/volume.hpp"

namespace aaa::volume {
namespace {

template <typename F>
auto stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

BinaryMask intersect(const BinaryMask& a, const BinaryMask& b) {
  std::vector<std::uint8_t> v(a.values().size());
  for (std::size_t n = 0; n < v.size(); ++n) v[n] = a.values()[n] & b.values()[n];
  return BinaryMask(a.grid(), std::move(v));
}

}  // namespace

CleanedMasks clean_pipeline(const LabelVolume& volume, const CleaningConfig& config) {
  stage("config", [&] {
    config.validate();
    return 0;
  });
  const auto& g = volume.grid();
  const auto range = config.roi_z_range.value_or(std::pair{0, g.dims[2] - 1});
  const LabelVolume roi = stage("crop_roi", [&] { return crop_roi(volume, range); });

  BinaryMask aaa = stage("merge_labels", [&] { return merge_labels(roi, {1, 2, 3}); });
  BinaryMask lumen = stage("merge_labels", [&] { return merge_labels(roi, {1}); });
  lumen = stage("largest_component(lumen)",
                [&] { return largest_component(lumen, config.connectivity); });

  aaa = stage("resample_isotropic(aaa)", [&] { return resample_isotropic(aaa); });
  lumen = stage("resample_isotropic(lumen)", [&] { return resample_isotropic(lumen); });

  auto smooth = [&](const char* name, const BinaryMask& m) {
    return stage(name, [&] {
      return convolution_smooth(m, config.smooth_kernel_radius_mm, config.smooth_threshold);
    });
  };
  aaa = smooth("convolution_smooth(aaa)", aaa);
  lumen = smooth("convolution_smooth(lumen)", lumen);

  aaa = stage("remove_extrusions(aaa)", [&] { return remove_extrusions(aaa, config.opening_radius_mm); });
  lumen = stage("remove_extrusions(lumen)",
                [&] { return remove_extrusions(lumen, config.opening_radius_mm); });
  aaa = stage("fill_holes(aaa)", [&] { return fill_holes(aaa); });
  lumen = stage("fill_holes(lumen)", [&] { return fill_holes(lumen); });
  aaa = smooth("convolution_smooth(aaa, second pass)", aaa);
  lumen = smooth("convolution_smooth(lumen, second pass)", lumen);

  aaa = stage("gaussian_smooth(aaa)", [&] { return gaussian_smooth_binary(aaa, config.gaussian_sigma); });
  lumen = stage("gaussian_smooth(lumen)",
                [&] { return gaussian_smooth_binary(lumen, config.gaussian_sigma); });

  // Smoothing can detach fragments; surfaces are extracted from one body each.
  aaa = stage("largest_component(aaa)", [&] { return largest_component(aaa, config.connectivity); });
  lumen = intersect(lumen, aaa);
  lumen = stage("largest_component(lumen, final)",
                [&] { return largest_component(lumen, config.connectivity); });
  return {std::move(aaa), std::move(lumen)};
}

}  // namespace aaa::volume
