#include "aaa/meshing.hpp"
#include "aaa/phantoms.hpp"
#include "aaa/surface.hpp"
#include "fixtures.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

using namespace aaa;
using namespace aaa::meshing;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("aaa_mesh_" + name);
}

double tet_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  return (b - a).cross(c - a).dot(d - a) / 6.0;
}

using fixture::from_corners;

using CornerKey = std::array<int, 3>;

CornerKey face_key(const TetMesh& m, FaceRef f) {
  const auto n = face_nodes(m.elements[f.element], f.face);
  CornerKey k{n[0], n[1], n[2]};
  std::sort(k.begin(), k.end());
  return k;
}

/// Every element face, keyed by its sorted corner ids.
std::map<CornerKey, std::vector<FaceRef>> face_table(const TetMesh& m) {
  std::map<CornerKey, std::vector<FaceRef>> table;
  for (int e = 0; e < static_cast<int>(m.elements.size()); ++e)
    for (int f = 0; f < 4; ++f) table[face_key(m, {e, f})].push_back({e, f});
  return table;
}

double face_area(const TetMesh& m, FaceRef f) {
  const auto n = face_nodes(m.elements[f.element], f.face);
  return 0.5 * (m.nodes[n[1]] - m.nodes[n[0]]).cross(m.nodes[n[2]] - m.nodes[n[0]]).norm();
}

std::size_t edge_count(const surface::TriSurface& s) {
  std::set<std::pair<int, int>> edges;
  for (const auto& t : s.triangles)
    for (int k = 0; k < 3; ++k) edges.insert(std::minmax(t[k], t[(k + 1) % 3]));
  return edges.size();
}

/// Distance along the ray p + s*d (|d| = 1) to the circle |x - c| = r in the
/// xy-plane, taking the first crossing ahead of p.
double ray_circle(const Vec3& p, const Vec3& d, const Vec3& c, double r) {
  const double dx = p.x() - c.x(), dy = p.y() - c.y();
  const double b = dx * d.x() + dy * d.y();
  const double a = d.x() * d.x() + d.y() * d.y();
  const double cc = dx * dx + dy * dy - r * r;
  const double disc = b * b - a * cc;
  REQUIRE(disc >= 0.0);
  return (-b - std::sqrt(disc)) / a;
}

void check_conforming_and_closed(const TetMesh& m) {
  const auto table = face_table(m);
  std::set<CornerKey> luminal;
  for (const auto& f : m.luminal) luminal.insert(face_key(m, f));
  std::set<int> top(m.top.begin(), m.top.end()), bottom(m.bottom.begin(), m.bottom.end());
  for (const auto& [key, refs] : table) {
    REQUIRE(refs.size() <= 2);
    if (refs.size() == 2) {
      CHECK(luminal.count(key) == 0);
      continue;
    }
    // A boundary face lies on the external surface, an end, or the lumen.
    const bool outer = std::all_of(key.begin(), key.end(), [&](int n) {
      return m.column_vertex[n] >= 0 && m.column_position[n] == 0.0;
    });
    const bool end = std::all_of(key.begin(), key.end(), [&](int n) { return top.count(n); }) ||
                     std::all_of(key.begin(), key.end(), [&](int n) { return bottom.count(n); });
    const int kinds = int(outer) + int(end) + int(luminal.count(key) > 0);
    CHECK(kinds == 1);
  }
}

}  // namespace

TEST_CASE("concentric cylinders: six prisms and 18 tets per triangle column") {
  const int n_theta = 48, n_z = 13;
  const auto ext = phantoms::tube(20.0, 60.0, n_theta, n_z);
  const auto lumen = phantoms::tube(10.0, 60.0, n_theta, n_z);
  LayeredMeshConfig cfg;
  cfg.thickness = 1.5;
  cfg.wall_layers = 2;
  cfg.ilt_layers = 4;
  BuildDiagnostics diag;
  const auto m = build_layered_mesh(ext, lumen, cfg, &diag);

  const std::size_t F = ext.triangles.size(), V = ext.vertices.size(), E = edge_count(ext);
  const std::size_t N = 6;
  CHECK(diag.contact_vertices == 0);
  CHECK(m.elements.size() == 18 * F);
  CHECK(m.count(Region::Wall) == 6 * F);
  CHECK(m.count(Region::Ilt) == 12 * F);
  // Each prism split adds its three quad diagonals and no interior edge.
  const std::size_t corner_nodes = V * (N + 1);
  const std::size_t edges = E * (N + 1) + V * N + E * N;
  CHECK(m.nodes.size() == corner_nodes + edges);

  // INTERFACE faces are shared by a wall and an ILT element with the same
  // six nodes.
  const auto table = face_table(m);
  REQUIRE(m.interface.size() == F);
  for (const auto& f : m.interface) {
    CHECK(m.regions[f.element] == Region::Wall);
    const auto& refs = table.at(face_key(m, f));
    REQUIRE(refs.size() == 2);
    const FaceRef other = refs[0] == f ? refs[1] : refs[0];
    CHECK(m.regions[other.element] == Region::Ilt);
    auto a = face_nodes(m.elements[f.element], f.face);
    auto b = face_nodes(m.elements[other.element], other.face);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
  }
  for (const auto& f : m.luminal) CHECK(m.regions[f.element] == Region::Ilt);
  check_conforming_and_closed(m);

  // Lumen nodes sit on the lumen cylinder.
  for (const auto& f : m.luminal)
    for (int n : face_nodes(m.elements[f.element], f.face)) {
      const double r = std::hypot(m.nodes[n].x(), m.nodes[n].y());
      CHECK(r == doctest::Approx(10.0).epsilon(0.01));
    }
}

TEST_CASE("layered mesh on a concentric cylinder phantom has good quality") {
  const auto ext = phantoms::tube(13.5, 100.0, 96, 41);
  const auto lumen = phantoms::tube(12.0, 100.0, 96, 41);
  const auto m = build_layered_mesh(ext, lumen, {});
  const auto q = quality_check(m);
  // Regression baseline for this phantom.
  CHECK(q.min_scaled_jacobian > 0.05);
  CHECK(q.ilt_elements == 0);
  CHECK(q.wall_elements == m.elements.size());
  CHECK(q.node_count == m.nodes.size());
  CHECK(m.luminal.size() == ext.triangles.size());
  CHECK(m.interface.empty());
  check_conforming_and_closed(m);

  double wall = 0.0;
  for (int e = 0; e < static_cast<int>(m.elements.size()); ++e) {
    CHECK(element_volume(m, e) > 0.0);
    wall += element_volume(m, e);
  }
  CHECK(wall == doctest::Approx(surface::area(ext) * 1.5).epsilon(0.10));

  // TOP and BOTTOM hold whole end rings through the thickness.
  for (int n : m.top) CHECK(m.nodes[n].z() == doctest::Approx(100.0));
  for (int n : m.bottom) CHECK(m.nodes[n].z() == doctest::Approx(0.0));
  CHECK(m.top.size() == m.bottom.size());
  // Per ring vertex: 3 corner levels, 2 vertical mids, 3 ring mids, 2 quad
  // diagonal mids.
  CHECK(m.top.size() == 96 * (3 + 2 + 3 + 2));
}

TEST_CASE("sphere pair: positive Jacobians and luminal area") {
  const auto ext = phantoms::sphere(25.0, 64, 32);
  const auto lumen = phantoms::sphere(20.0, 64, 32);
  const auto m = build_layered_mesh(ext, lumen, {});
  const auto q = quality_check(m);
  CHECK(q.min_scaled_jacobian > 0.0);
  CHECK(q.ilt_elements > 0);

  double luminal_area = 0.0;
  for (const auto& f : m.luminal) luminal_area += face_area(m, f);
  CHECK(luminal_area == doctest::Approx(surface::area(lumen)).epsilon(0.05));

  double wall = 0.0;
  for (int e = 0; e < static_cast<int>(m.elements.size()); ++e)
    if (m.regions[e] == Region::Wall) wall += element_volume(m, e);
  CHECK(wall == doctest::Approx(surface::area(ext) * 1.5).epsilon(0.10));
  CHECK(m.top.empty());
  CHECK(m.bottom.empty());
  check_conforming_and_closed(m);
}

TEST_CASE("lumen touching the wall: no ILT along contact columns") {
  const int n_theta = 96;
  const double shift = 1.4, r_ext = 12.0, r_lumen = 10.5;
  const auto ext = phantoms::tube(r_ext, 60.0, n_theta, 21);
  auto lumen = phantoms::tube(r_lumen, 60.0, n_theta, 21);
  for (auto& v : lumen.vertices) v.x() += shift;
  surface::update_normals(lumen);

  LayeredMeshConfig cfg;
  BuildDiagnostics diag;
  const auto m = build_layered_mesh(ext, lumen, cfg, &diag);

  // Analytic ray distances from the external vertices.
  const auto dir = surface::inward_directions(ext);
  const double limit = cfg.thickness + cfg.ilt_min_thickness;
  std::vector<char> contact(ext.vertices.size());
  std::size_t n_contact = 0;
  for (std::size_t v = 0; v < ext.vertices.size(); ++v) {
    const double d = ray_circle(ext.vertices[v], dir[v], Vec3(shift, 0, 0), r_lumen);
    REQUIRE(std::abs(d - limit) > 0.015);
    contact[v] = d <= limit;
    n_contact += contact[v];
  }
  REQUIRE(n_contact > 0);
  REQUIRE(n_contact < ext.vertices.size());
  CHECK(diag.contact_vertices == n_contact);

  std::size_t ilt_triangles = 0;
  for (const auto& t : ext.triangles) ilt_triangles += !contact[t[0]] && !contact[t[1]] && !contact[t[2]];
  CHECK(m.count(Region::Ilt) == 3 * 4 * ilt_triangles);
  CHECK(m.count(Region::Wall) == 3 * 2 * ext.triangles.size());
  CHECK(m.interface.size() == ilt_triangles);

  // No ILT element touches a contact column.
  for (std::size_t e = 0; e < m.elements.size(); ++e) {
    if (m.regions[e] != Region::Ilt) continue;
    for (int c = 0; c < 4; ++c) {
      const int n = m.elements[e][c];
      if (m.column_vertex[n] >= 0) CHECK_FALSE(contact[m.column_vertex[n]]);
    }
  }
  quality_check(m);
  check_conforming_and_closed(m);

  // Luminal faces: ILT-owned where ILT exists, wall-owned where it does not.
  std::size_t wall_luminal = 0;
  for (const auto& f : m.luminal) wall_luminal += m.regions[f.element] == Region::Wall;
  CHECK(wall_luminal == ext.triangles.size() - ilt_triangles);

  const auto bare = without_ilt(m);
  validate(bare);
  CHECK(bare.elements.size() == m.count(Region::Wall));
  CHECK(bare.luminal.size() == ext.triangles.size());
  CHECK(bare.interface.empty());
  check_conforming_and_closed(bare);
}

TEST_CASE("build_layered_mesh rejects bad input") {
  const auto ext = phantoms::tube(12.0, 40.0, 32, 9);
  const auto lumen = phantoms::tube(10.0, 40.0, 32, 9);
  LayeredMeshConfig cfg;
  cfg.wall_layers = 1;
  CHECK_THROWS_AS(build_layered_mesh(ext, lumen, cfg), Error);
  cfg = {};
  cfg.thickness = 0.0;
  CHECK_THROWS_AS(build_layered_mesh(ext, lumen, cfg), Error);
  // Lumen outside the wall: the inward rays point away from it.
  auto far = lumen;
  for (auto& v : far.vertices) v.x() += 100.0;
  CHECK_THROWS_AS(build_layered_mesh(ext, far, {}), Error);
}

TEST_CASE("prisms_to_tets partitions the unit prism for every labelling") {
  const std::array<Vec3, 6> corner{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0),
                                   Vec3(0, 0, 1), Vec3(1, 0, 1), Vec3(0, 1, 1)};
  std::array<int, 6> ids{0, 1, 2, 3, 4, 5};
  int labellings = 0;
  do {
    // Global id ids[k] sits at prism corner k.
    std::array<Vec3, 6> at{};
    for (int k = 0; k < 6; ++k) at[ids[k]] = corner[k];
    double total = 0.0;
    for (const auto& t : prisms_to_tets(ids)) {
      const double v = std::abs(tet_volume(at[t[0]], at[t[1]], at[t[2]], at[t[3]]));
      CHECK(v > 0.0);
      total += v;
    }
    CHECK(total == doctest::Approx(0.5).epsilon(1e-15));
    ++labellings;
  } while (std::next_permutation(ids.begin(), ids.end()));
  CHECK(labellings == 720);
}

TEST_CASE("adjacent prisms split their shared quad the same way") {
  // Prism A over triangle (p, q, r), prism B over (q, s, r); they share the
  // quad q r r' q'.
  std::mt19937 rng(7);
  auto diagonal = [](const std::array<std::array<int, 4>, 3>& tets, const std::array<int, 4>& quad) {
    // quad = a b b' a'; the diagonals are a-b' and b-a'.
    std::set<std::pair<int, int>> edges;
    for (const auto& t : tets)
      for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) edges.insert(std::minmax(t[i], t[j]));
    const bool d1 = edges.count(std::minmax(quad[0], quad[2])) > 0;
    const bool d2 = edges.count(std::minmax(quad[1], quad[3])) > 0;
    CHECK(d1 != d2);
    return d1 ? std::minmax(quad[0], quad[2]) : std::minmax(quad[1], quad[3]);
  };
  for (int trial = 0; trial < 500; ++trial) {
    std::array<int, 8> g{};
    std::iota(g.begin(), g.end(), 0);
    std::shuffle(g.begin(), g.end(), rng);
    const int p = g[0], q = g[1], r = g[2], s = g[3], p2 = g[4], q2 = g[5], r2 = g[6], s2 = g[7];
    const auto a = prisms_to_tets({p, q, r, p2, q2, r2});
    const auto b = prisms_to_tets({q, s, r, q2, s2, r2});
    const std::array<int, 4> quad{q, r, r2, q2};
    const auto da = diagonal(a, quad), db = diagonal(b, quad);
    CHECK(da == db);
    const int lowest = *std::min_element(quad.begin(), quad.end());
    CHECK((da.first == lowest || da.second == lowest));
  }
}

TEST_CASE("degenerate prism gives zero-volume tets flagged by quality_check") {
  const std::vector<Vec3> pts{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0),
                              Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
  std::vector<std::array<int, 4>> tets;
  for (const auto& t : prisms_to_tets({0, 1, 2, 3, 4, 5})) {
    CHECK(tet_volume(pts[t[0]], pts[t[1]], pts[t[2]], pts[t[3]]) == 0.0);
    tets.push_back(t);
  }
  const auto m = from_corners(pts, tets);
  try {
    quality_check(m);
    FAIL("expected an error");
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("3 inverted or degenerate") != std::string::npos);
    CHECK(msg.find(": 0 1 2") != std::string::npos);
  }
}

TEST_CASE("regular tetrahedron quality") {
  const std::array<Vec3, 4> reg{Vec3(1, 1, 1), Vec3(-1, 1, -1), Vec3(1, -1, -1), Vec3(-1, -1, 1)};
  REQUIRE(tet_volume(reg[0], reg[1], reg[2], reg[3]) > 0.0);
  CHECK(std::abs(min_scaled_jacobian(reg) - 1.0) < 1e-12);
  CHECK(std::abs(aspect_ratio(reg) - 1.0) < 1e-12);
  // Any corner relabelling that keeps the orientation keeps the value.
  const std::array<Vec3, 4> rot{reg[1], reg[2], reg[0], reg[3]};
  CHECK(std::abs(min_scaled_jacobian(rot) - 1.0) < 1e-12);
  const std::array<Vec3, 4> flipped{reg[0], reg[2], reg[1], reg[3]};
  CHECK(min_scaled_jacobian(flipped) == doctest::Approx(-1.0));

  const std::array<Vec3, 4> flat{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0.3, 0.3, 1e-3)};
  CHECK(min_scaled_jacobian(flat) < 0.01);
  CHECK(aspect_ratio(flat) > 50.0);
}

TEST_CASE("quality_check names the inverted element") {
  std::vector<Vec3> pts;
  std::vector<std::array<int, 4>> tets;
  for (int k = 0; k < 5; ++k) {
    const Vec3 o(3.0 * k, 0, 0);
    const int b = static_cast<int>(pts.size());
    for (const Vec3& d : {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)}) pts.push_back(o + d);
    tets.push_back({b, b + 1, b + 2, b + 3});
  }
  std::swap(tets[3][1], tets[3][2]);
  const auto m = from_corners(pts, tets);
  try {
    quality_check(m);
    FAIL("expected an error");
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("1 inverted or degenerate element(s): 3") != std::string::npos);
  }
}

TEST_CASE("face numbering follows the solver-deck convention") {
  const std::vector<Vec3> pts{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)};
  const auto m = from_corners(pts, {{0, 1, 2, 3}});
  const Vec3 centroid(0.25, 0.25, 0.25);
  const std::set<int> expected[4] = {{0, 1, 2}, {0, 1, 3}, {1, 2, 3}, {0, 2, 3}};
  for (int f = 0; f < 4; ++f) {
    const auto n = face_nodes(m.elements[0], f);
    CHECK(std::set<int>{n[0], n[1], n[2]} == expected[f]);
    const Vec3 normal = (m.nodes[n[1]] - m.nodes[n[0]]).cross(m.nodes[n[2]] - m.nodes[n[0]]);
    CHECK(normal.dot(m.nodes[n[0]] - centroid) > 0.0);
    for (int k = 0; k < 3; ++k) {
      const Vec3 mid = 0.5 * (m.nodes[n[k]] + m.nodes[n[(k + 1) % 3]]);
      CHECK((m.nodes[n[3 + k]] - mid).norm() < 1e-15);
    }
  }
}

TEST_CASE("validate catches structural damage") {
  const std::vector<Vec3> pts{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)};
  auto m = from_corners(pts, {{0, 1, 2, 3}});
  validate(m);
  auto moved = m;
  moved.nodes[moved.elements[0][4]] += Vec3(0.1, 0, 0);
  CHECK_THROWS_AS(validate(moved), Error);
  auto dangling = m;
  dangling.elements[0][9] = 99;
  CHECK_THROWS_AS(validate(dangling), Error);
  auto bad_face = m;
  bad_face.luminal.push_back({0, 4});
  CHECK_THROWS_AS(validate(bad_face), Error);
}

TEST_CASE("mesh export/import round trip") {
  const auto ext = phantoms::tube(12.0, 40.0, 40, 11);
  auto lumen = phantoms::tube(10.5, 40.0, 40, 11);
  for (auto& v : lumen.vertices) v.x() += 1.4;
  surface::update_normals(lumen);
  LayeredMeshConfig cfg;
  cfg.ilt_min_thickness = 0.2;
  const auto m = build_layered_mesh(ext, lumen, cfg);
  REQUIRE(m.count(Region::Ilt) > 0);
  REQUIRE(!m.interface.empty());

  auto same = [&](const TetMesh& r) {
    REQUIRE(r.nodes.size() == m.nodes.size());
    double worst = 0.0;
    for (std::size_t n = 0; n < m.nodes.size(); ++n) worst = std::max(worst, (r.nodes[n] - m.nodes[n]).norm());
    CHECK(worst <= 1e-12);
    CHECK(r.elements == m.elements);
    CHECK(r.regions == m.regions);
    CHECK(r.top == m.top);
    CHECK(r.bottom == m.bottom);
    CHECK(r.luminal == m.luminal);
    CHECK(r.interface == m.interface);
    CHECK(r.column_vertex == m.column_vertex);
    CHECK(r.column_position == m.column_position);
  };

  SUBCASE("vtk") {
    const auto path = temp_path("rt.vtk");
    PointArray scalar{"thickness", 1, std::vector<double>(m.nodes.size())};
    PointArray vec{"displacement", 3, std::vector<double>(3 * m.nodes.size())};
    PointArray ten{"stress", 6, std::vector<double>(6 * m.nodes.size())};
    for (std::size_t k = 0; k < scalar.values.size(); ++k) scalar.values[k] = std::sqrt(double(k)) / 7.0;
    for (std::size_t k = 0; k < vec.values.size(); ++k) vec.values[k] = 1e-3 * std::sin(double(k));
    for (std::size_t k = 0; k < ten.values.size(); ++k) ten.values[k] = std::cos(double(k)) / 3.0;
    export_mesh(m, path);
    same(import_mesh(path));
    write_vtk(m, path, {scalar, vec, ten});
    std::vector<PointArray> arrays;
    same(read_vtk(path, &arrays));
    REQUIRE(arrays.size() == 3);
    CHECK(arrays[0].name == "thickness");
    CHECK(arrays[0].values == scalar.values);
    CHECK(arrays[1].components == 3);
    CHECK(arrays[1].values == vec.values);
    CHECK(arrays[2].components == 6);
    CHECK(arrays[2].values == ten.values);
    std::filesystem::remove(path);
  }
  SUBCASE("solver deck") {
    const auto path = temp_path("rt.inp");
    export_mesh(m, path);
    std::ifstream in(path);
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(text.find("TYPE=C3D10H") != std::string::npos);
    CHECK(text.find("ELSET=WALL") != std::string::npos);
    CHECK(text.find("ELSET=ILT") != std::string::npos);
    CHECK(text.find("*NSET, NSET=TOP") != std::string::npos);
    CHECK(text.find("*SURFACE, TYPE=ELEMENT, NAME=LUMINAL") != std::string::npos);
    same(import_mesh(path));
    std::filesystem::remove(path);
  }
  SUBCASE("unknown extension") {
    CHECK_THROWS_AS(export_mesh(m, temp_path("x.msh")), Error);
    CHECK_THROWS_AS(import_mesh(temp_path("x.msh")), Error);
  }
}

TEST_CASE("import rejects dangling node references and malformed files") {
  const std::vector<Vec3> pts{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)};
  const auto m = from_corners(pts, {{0, 1, 2, 3}});
  const auto vtk = temp_path("dangle.vtk");
  const auto inp = temp_path("dangle.inp");
  write_vtk(m, vtk);
  write_inp(m, inp);
  auto rewrite = [](const std::filesystem::path& p, const std::string& from, const std::string& to) {
    std::ifstream in(p);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    const auto at = text.find(from);
    REQUIRE(at != std::string::npos);
    text.replace(at, from.size(), to);
    std::ofstream(p) << text;
  };
  rewrite(vtk, "\n10 0 1 2 3 ", "\n10 0 1 2 42 ");
  CHECK_THROWS_WITH_AS(read_vtk(vtk), doctest::Contains("missing node 42"), Error);
  rewrite(inp, "\n1, 1, 2, 3, 4,", "\n1, 1, 2, 3, 77,");
  CHECK_THROWS_WITH_AS(read_inp(inp), doctest::Contains("undefined node 77"), Error);

  std::ofstream(vtk) << "# vtk DataFile Version 3.0\nx\nASCII\nDATASET UNSTRUCTURED_GRID\nPOINTS 2 double\n0 0 zero\n";
  CHECK_THROWS_AS(read_vtk(vtk), Error);
  std::ofstream(inp) << "*NODE\n1, 0, 0, 0\n*ELEMENT, TYPE=C3D4\n1, 1, 1, 1, 1\n";
  CHECK_THROWS_AS(read_inp(inp), Error);
  std::filesystem::remove(vtk);
  std::filesystem::remove(inp);
}
