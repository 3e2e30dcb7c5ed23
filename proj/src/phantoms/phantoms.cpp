#include "aaa/phantoms.hpp"

#include <cmath>
#include <numbers>

namespace aaa::phantoms {
namespace {

double bulge(const VesselSpec& s, double z) {
  const double d = (z - 0.5 * s.length) / s.bulge_sigma;
  return std::exp(-0.5 * d * d);
}

}  // namespace

VesselSpec cylinder_spec() { return VesselSpec{}; }

VesselSpec aaa_bulge_spec() {
  VesselSpec s;
  s.spacing = {1.25, 1.25, 1.25};
  s.ext_radius = 12.0;
  s.lumen_radius = 10.5;
  s.bulge_ext = 14.0;
  s.bulge_lumen = 3.0;
  s.lumen_shift = 4.0;
  return s;
}

double ext_radius_at(const VesselSpec& s, double z) { return s.ext_radius + s.bulge_ext * bulge(s, z); }
double lumen_radius_at(const VesselSpec& s, double z) { return s.lumen_radius + s.bulge_lumen * bulge(s, z); }

volume::LabelVolume vessel_volume(const VesselSpec& s) {
  const double rmax = s.ext_radius + s.bulge_ext + s.margin;
  volume::Grid g;
  const int nxy = 2 * static_cast<int>(std::ceil(rmax / s.spacing.x())) + 1;
  g.dims = {nxy, static_cast<int>(std::ceil(rmax / s.spacing.y())) * 2 + 1,
            static_cast<int>(std::lround(s.length / s.spacing.z()))};
  g.spacing = s.spacing;
  g.origin = Vec3(-0.5 * (g.dims[0] - 1) * s.spacing.x(), -0.5 * (g.dims[1] - 1) * s.spacing.y(),
                  0.5 * s.spacing.z());
  std::vector<std::uint8_t> labels(g.voxel_count(), 0);
  for (int k = 0; k < g.dims[2]; ++k)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i) {
        const Vec3 p = g.center(i, j, k);
        const double r = std::hypot(p.x(), p.y());
        const double shift = s.lumen_shift * bulge(s, p.z());
        const double rl = std::hypot(p.x() - shift, p.y());
        std::uint8_t l = 0;
        if (r <= ext_radius_at(s, p.z())) l = 2;
        if (rl <= lumen_radius_at(s, p.z()) && r <= ext_radius_at(s, p.z())) l = 1;
        if (s.thin_sheet && j == g.dims[1] / 2 && p.x() > 0.0 && r <= ext_radius_at(s, p.z()) + 8.0 &&
            std::abs(p.z() - 0.5 * s.length) < 0.2 * s.length)
          l = 1;
        if (s.calcification) {
          const double rc = 0.5 * (ext_radius_at(s, p.z()) + lumen_radius_at(s, p.z()));
          const Vec3 c(0.0, -rc, 0.4 * s.length);
          if ((p - c).norm() <= 1.6 && l == 2) l = 3;
        }
        labels[g.index(i, j, k)] = l;
      }
  return volume::LabelVolume(g, std::move(labels));
}

surface::TriSurface tube(double radius, double length, int n_theta, int n_z, double z0) {
  surface::TriSurface s;
  for (int k = 0; k <= n_z; ++k)
    for (int i = 0; i < n_theta; ++i) {
      const double th = 2.0 * std::numbers::pi * i / n_theta;
      s.vertices.emplace_back(radius * std::cos(th), radius * std::sin(th), z0 + length * k / n_z);
    }
  auto id = [&](int i, int k) { return k * n_theta + (i % n_theta); };
  for (int k = 0; k < n_z; ++k)
    for (int i = 0; i < n_theta; ++i) {
      // Alternate the quad diagonal so the mesh has no preferred twist.
      const int a = id(i, k), b = id(i + 1, k), c = id(i + 1, k + 1), d = id(i, k + 1);
      if ((i + k) % 2 == 0) {
        s.triangles.push_back({a, b, c});
        s.triangles.push_back({a, c, d});
      } else {
        s.triangles.push_back({a, b, d});
        s.triangles.push_back({b, c, d});
      }
    }
  s.ends.z_min = z0;
  s.ends.z_max = z0 + length;
  s.ends.tolerance = 1e-6 * length;
  surface::update_normals(s);
  return s;
}

surface::TriSurface sphere(double radius, int n_theta, int n_phi) {
  surface::TriSurface s;
  s.vertices.emplace_back(0.0, 0.0, -radius);
  for (int k = 1; k < n_phi; ++k) {
    const double ph = std::numbers::pi * k / n_phi;
    for (int i = 0; i < n_theta; ++i) {
      const double th = 2.0 * std::numbers::pi * i / n_theta;
      s.vertices.emplace_back(radius * std::sin(ph) * std::cos(th), radius * std::sin(ph) * std::sin(th),
                              -radius * std::cos(ph));
    }
  }
  s.vertices.emplace_back(0.0, 0.0, radius);
  const int top = static_cast<int>(s.vertices.size()) - 1;
  auto id = [&](int i, int k) { return 1 + (k - 1) * n_theta + (i % n_theta); };
  for (int i = 0; i < n_theta; ++i) s.triangles.push_back({0, id(i + 1, 1), id(i, 1)});
  for (int k = 1; k + 1 < n_phi; ++k)
    for (int i = 0; i < n_theta; ++i) {
      s.triangles.push_back({id(i, k), id(i + 1, k), id(i + 1, k + 1)});
      s.triangles.push_back({id(i, k), id(i + 1, k + 1), id(i, k + 1)});
    }
  for (int i = 0; i < n_theta; ++i) s.triangles.push_back({top, id(i, n_phi - 1), id(i + 1, n_phi - 1)});
  surface::update_normals(s);
  return s;
}

volume::BinaryMask ball_mask(int n, double radius_vox, double spacing) {
  volume::Grid g;
  g.dims = {n, n, n};
  g.spacing = Vec3::Constant(spacing);
  volume::BinaryMask m(g);
  const double c = 0.5 * (n - 1);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        if (Vec3(i - c, j - c, k - c).norm() <= radius_vox) m.set(i, j, k, true);
  return m;
}

}  // namespace aaa::phantoms
