#pragma once

#include "aaa/common.hpp"
#include "aaa/volume.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

namespace aaa::surface {

/// Axial planes where a surface was clipped by the end of the imaged
/// region. Produced by extract_isosurface when the mask touches the first or
/// last slice; `tolerance` is the distance within which a vertex counts as
/// lying on a plane.
struct EndPlanes {
  std::optional<double> z_min;
  std::optional<double> z_max;
  double tolerance = 0.0;
};

/// Triangle surface in mm. Triangles wind counter-clockwise seen from
/// outside. Closed surfaces are watertight; open ones have boundary rings
/// only on their end planes.
struct TriSurface {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  /// Outward unit vertex normals (area-weighted); see compute_normals.
  std::vector<Vec3> normals;
  EndPlanes ends;
};

/// Area-weighted outward vertex normals.
std::vector<Vec3> compute_normals(const TriSurface& s);
void update_normals(TriSurface& s);

double area(const TriSurface& s);
/// Signed enclosed volume (divergence theorem); meaningful for closed surfaces.
double enclosed_volume(const TriSurface& s);
/// V - E + F.
int euler_characteristic(const TriSurface& s);
/// Edges used by exactly one triangle, as (a, b) in triangle winding order.
std::vector<std::pair<int, int>> boundary_edges(const TriSurface& s);
bool is_closed_manifold(const TriSurface& s);

/// Marching cubes at iso-level 0.5 of the 0/1 indicator. Vertices sit at
/// edge midpoints. The mask is padded with background so the output is
/// closed; a mask touching its first/last slice yields flat caps there and
/// the cap planes are recorded in `ends`.
TriSurface extract_isosurface(const volume::BinaryMask& mask);

/// Umbrella-operator smoothing. Vertices on an end-plane ring keep their z
/// and move only along the ring; other boundary vertices stay put.
TriSurface laplacian_smooth(const TriSurface& s, int iterations, double lambda);

/// Moves every vertex `thickness` along its inward normal (ring vertices
/// along the in-plane component) and checks the result for folds and
/// self-intersections.
TriSurface offset_inward(const TriSurface& s, double thickness);

/// Inward unit directions used for offsetting and ray casting: the negated
/// vertex normal, projected into the end plane for ring vertices.
std::vector<Vec3> inward_directions(const TriSurface& s);

struct EndRings {
  std::vector<int> top;
  std::vector<int> bottom;
};

/// Vertices within the end-plane tolerance of the max-z and min-z planes.
EndRings identify_end_rings(const TriSurface& s);

/// Removes the flat caps of a clipped surface, leaving an open tube whose
/// boundary rings lie in the end planes.
TriSurface open_ends(const TriSurface& s);

/// 0 = interior vertex, 1 = bottom boundary ring, 2 = top boundary ring,
/// 3 = boundary vertex off the end planes (held fixed by smoothing).
std::vector<int> ring_membership(const TriSurface& s);

/// Reports the first pair of intersecting, non-adjacent triangles.
std::optional<std::pair<int, int>> find_self_intersection(const TriSurface& s);

void write_stl(const TriSurface& s, const std::filesystem::path& path);
void write_vtk_polydata(const TriSurface& s, const std::filesystem::path& path);
TriSurface read_vtk_polydata(const std::filesystem::path& path);

}  // namespace aaa::surface
