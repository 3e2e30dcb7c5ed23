#pragma once

#include "aaa/surface.hpp"
#include "aaa/volume.hpp"

namespace aaa::phantoms {

/// Axisymmetric vessel along z with an optional Gaussian bulge of the outer
/// wall (and, less, of the lumen). The bulge gap fills with label 2, the
/// same label the segmenter uses for wall+ILT.
struct VesselSpec {
  Vec3 spacing{1.0, 1.0, 1.0};
  double length = 120.0;
  double ext_radius = 12.0;
  double lumen_radius = 10.5;
  double bulge_ext = 0.0;    // extra outer radius at the bulge centre
  double bulge_lumen = 0.0;  // extra lumen radius at the bulge centre
  double bulge_sigma = 18.0;
  /// Lateral offset of the lumen axis at the bulge centre (eccentric ILT).
  double lumen_shift = 0.0;
  double margin = 6.0;
  /// One-voxel lumen-labelled fin crossing the wall and sticking out of it.
  bool thin_sheet = false;
  /// Small calcified blob embedded in the wall.
  bool calcification = false;
};

/// Straight tube: ext 12 mm, lumen 10.5 mm.
VesselSpec cylinder_spec();
/// Fusiform aneurysm with eccentric thrombus.
VesselSpec aaa_bulge_spec();

double ext_radius_at(const VesselSpec& spec, double z);
double lumen_radius_at(const VesselSpec& spec, double z);

/// Voxel volume covering z in [0, length] with the vessel touching both
/// end slices.
volume::LabelVolume vessel_volume(const VesselSpec& spec);

/// Open tube of the given radius on z in [z0, z0 + length], rings at the
/// two end planes. Outward normals point away from the axis.
surface::TriSurface tube(double radius, double length, int n_theta, int n_z, double z0 = 0.0);

/// Closed UV sphere centred at the origin.
surface::TriSurface sphere(double radius, int n_theta, int n_phi);

/// Voxelised ball (centre at the grid centre, radius in voxels).
volume::BinaryMask ball_mask(int n, double radius_vox, double spacing = 1.0);

}  // namespace aaa::phantoms
