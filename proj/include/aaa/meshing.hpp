#pragma once

#include "aaa/common.hpp"
#include "aaa/surface.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace aaa::meshing {

enum class Region : std::uint8_t { Wall = 0, Ilt = 1 };

const char* region_name(Region r);

/// Quadratic tetrahedron: corners 0-3, then mid-edge nodes on
/// (0,1) (1,2) (0,2) (0,3) (1,3) (2,3). Same order as VTK cell type 24 and
/// Abaqus C3D10.
using Tet10 = std::array<int, 10>;

/// A tetrahedron face, identified by element and local face 0-3. Local
/// face f has the corners of Abaqus face S(f+1): {0,1,2} {0,1,3} {1,2,3}
/// {0,2,3}.
struct FaceRef {
  int element = 0;
  int face = 0;
  friend bool operator==(const FaceRef&, const FaceRef&) = default;
  friend auto operator<=>(const FaceRef&, const FaceRef&) = default;
};

/// Six nodes of a local face: corners counter-clockwise seen from outside
/// a positively oriented element, then the mid-edge nodes (c0,c1) (c1,c2)
/// (c2,c0).
std::array<int, 6> face_local_nodes(int face);
std::array<int, 6> face_nodes(const Tet10& tet, int face);

struct TetMesh {
  std::vector<Vec3> nodes;
  std::vector<Tet10> elements;
  std::vector<Region> regions;
  /// Sorted node ids on the clipped ends of the vessel.
  std::vector<int> top;
  std::vector<int> bottom;
  /// Faces loaded by luminal pressure.
  std::vector<FaceRef> luminal;
  /// Wall faces shared with ILT elements.
  std::vector<FaceRef> interface;
  /// Through-thickness bookkeeping from layered construction. For wall
  /// nodes on a vertical column: the external surface vertex the column
  /// grows from, and the distance (mm) from that surface. -1 / 0 elsewhere.
  /// Empty for meshes without columns.
  std::vector<int> column_vertex;
  std::vector<double> column_position;

  bool has_columns() const { return !column_vertex.empty(); }
  std::size_t count(Region r) const;
};

struct LayeredMeshConfig {
  double thickness = 1.5;
  int wall_layers = 2;
  int ilt_layers = 4;
  /// Columns whose ILT would be thinner than this (mm) are treated as
  /// wall-lumen contact: no ILT elements there.
  double ilt_min_thickness = 1.0;
  /// Neighbour-averaging passes over the inward directions used to cast the
  /// ILT columns. 0 uses the raw vertex normals.
  int ilt_direction_smoothing = 30;

  void validate() const;
};

struct BuildDiagnostics {
  /// External vertices whose ray missed the lumen and were resolved by
  /// nearest-point projection.
  std::vector<int> fallback_vertices;
  std::size_t contact_vertices = 0;
};

/// Sweeps the external wall surface inwards. Each external vertex gets a
/// node column: wall nodes at equal fractions of `thickness` along its
/// inward normal, then ILT nodes at equal fractions of the ray from the last
/// wall node to the lumen, cast along the smoothed inward direction. Each surface triangle yields a stack of prisms, split into
/// tetrahedra and elevated to 10 nodes. Capped surfaces are opened first.
TetMesh build_layered_mesh(const surface::TriSurface& wall_ext, const surface::TriSurface& lumen,
                           const LayeredMeshConfig& config, BuildDiagnostics* diagnostics = nullptr);

/// Splits a prism (bottom triangle 0-2, top triangle 3-5, node i+3 above
/// node i) into 3 tetrahedra. Every quad face is cut along the diagonal
/// through its lowest global node id, so neighbouring prisms agree. The
/// returned tetrahedra are not orientation-corrected.
std::array<std::array<int, 4>, 3> prisms_to_tets(const std::array<int, 6>& prism);

struct QualityReport {
  double min_scaled_jacobian = 0.0;
  double max_aspect_ratio = 0.0;
  int worst_element = -1;
  std::size_t wall_elements = 0;
  std::size_t ilt_elements = 0;
  std::size_t node_count = 0;
};

/// Scaled Jacobian of a tet at each corner; 1 for the regular tetrahedron.
double min_scaled_jacobian(const std::array<Vec3, 4>& corners);
/// Longest edge over 2*sqrt(6)*inradius; 1 for the regular tetrahedron.
double aspect_ratio(const std::array<Vec3, 4>& corners);
double element_volume(const TetMesh& mesh, int element);

/// Throws listing the element ids whose scaled Jacobian is not positive.
QualityReport quality_check(const TetMesh& mesh);

/// Checks structural invariants: node indices in range, mid nodes at edge
/// midpoints, set references valid.
void validate(const TetMesh& mesh);

/// Drops ILT elements and unused nodes. The pressure then acts on the wall's
/// inner surface: LUMINAL becomes INTERFACE plus the wall-owned LUMINAL faces.
TetMesh without_ilt(const TetMesh& mesh);

struct PointArray {
  std::string name;
  int components = 1;
  std::vector<double> values;
};

/// Legacy VTK unstructured grid (ASCII). Sets travel as field data, the
/// region as cell data, columns and `arrays` as point data.
void write_vtk(const TetMesh& mesh, const std::filesystem::path& path,
               const std::vector<PointArray>& arrays = {});
/// Reads a file written by write_vtk; extra point arrays go to `arrays`.
TetMesh read_vtk(const std::filesystem::path& path, std::vector<PointArray>* arrays = nullptr);

/// Abaqus-style input deck with C3D10H elements, node sets and element
/// surfaces. Column data is kept in comment lines.
void write_inp(const TetMesh& mesh, const std::filesystem::path& path);
TetMesh read_inp(const std::filesystem::path& path);

/// Dispatch on extension: .vtk or .inp.
void export_mesh(const TetMesh& mesh, const std::filesystem::path& path);
TetMesh import_mesh(const std::filesystem::path& path);

}  // namespace aaa::meshing
