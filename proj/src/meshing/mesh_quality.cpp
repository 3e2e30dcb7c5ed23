#include "aaa/meshing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace aaa::meshing {
namespace {

std::array<Vec3, 4> corners_of(const TetMesh& m, int e) {
  const auto& el = m.elements[e];
  return {m.nodes[el[0]], m.nodes[el[1]], m.nodes[el[2]], m.nodes[el[3]]};
}

constexpr int kEdges[6][2] = {{0, 1}, {1, 2}, {0, 2}, {0, 3}, {1, 3}, {2, 3}};

void check_faces(const TetMesh& m, const std::vector<FaceRef>& faces, const char* name) {
  for (const auto& f : faces)
    if (f.element < 0 || f.element >= static_cast<int>(m.elements.size()) || f.face < 0 || f.face > 3)
      throw Error(std::string("mesh: ") + name + " references element " + std::to_string(f.element) + " face " +
                  std::to_string(f.face));
}

}  // namespace

double min_scaled_jacobian(const std::array<Vec3, 4>& x) {
  // Edge triples at each corner, ordered so a positive tet gives positive
  // determinants.
  static constexpr int kCorner[4][4] = {{0, 1, 2, 3}, {1, 2, 0, 3}, {2, 0, 1, 3}, {3, 0, 2, 1}};
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& c : kCorner) {
    const Vec3 a = x[c[1]] - x[c[0]], b = x[c[2]] - x[c[0]], d = x[c[3]] - x[c[0]];
    const double len = a.norm() * b.norm() * d.norm();
    const double sj = len > 0.0 ? std::sqrt(2.0) * a.cross(b).dot(d) / len : 0.0;
    worst = std::min(worst, sj);
  }
  return worst;
}

double aspect_ratio(const std::array<Vec3, 4>& x) {
  double lmax = 0.0;
  for (const auto& e : kEdges) lmax = std::max(lmax, (x[e[0]] - x[e[1]]).norm());
  const double vol = std::abs((x[1] - x[0]).cross(x[2] - x[0]).dot(x[3] - x[0])) / 6.0;
  double faces = 0.0;
  for (int f = 0; f < 4; ++f) {
    const auto local = face_local_nodes(f);
    faces += 0.5 * (x[local[1]] - x[local[0]]).cross(x[local[2]] - x[local[0]]).norm();
  }
  if (vol <= 0.0) return std::numeric_limits<double>::infinity();
  const double inradius = 3.0 * vol / faces;
  return lmax / (2.0 * std::sqrt(6.0) * inradius);
}

double element_volume(const TetMesh& m, int e) {
  const auto x = corners_of(m, e);
  return (x[1] - x[0]).cross(x[2] - x[0]).dot(x[3] - x[0]) / 6.0;
}

QualityReport quality_check(const TetMesh& m) {
  QualityReport r;
  r.node_count = m.nodes.size();
  r.wall_elements = m.count(Region::Wall);
  r.ilt_elements = m.count(Region::Ilt);
  r.min_scaled_jacobian = std::numeric_limits<double>::infinity();
  std::vector<int> bad;
  for (int e = 0; e < static_cast<int>(m.elements.size()); ++e) {
    const auto x = corners_of(m, e);
    const double sj = min_scaled_jacobian(x);
    if (sj < r.min_scaled_jacobian) {
      r.min_scaled_jacobian = sj;
      r.worst_element = e;
    }
    r.max_aspect_ratio = std::max(r.max_aspect_ratio, aspect_ratio(x));
    if (!(sj > 0.0)) bad.push_back(e);
  }
  if (!bad.empty()) {
    std::ostringstream msg;
    msg << "quality_check: " << bad.size() << " inverted or degenerate element(s):";
    for (std::size_t k = 0; k < std::min<std::size_t>(bad.size(), 20); ++k) msg << ' ' << bad[k];
    if (bad.size() > 20) msg << " ...";
    throw Error(msg.str());
  }
  return r;
}

void validate(const TetMesh& m) {
  const int nn = static_cast<int>(m.nodes.size());
  if (m.regions.size() != m.elements.size()) throw Error("mesh: region tags do not match element count");
  for (std::size_t e = 0; e < m.elements.size(); ++e) {
    for (int n : m.elements[e])
      if (n < 0 || n >= nn)
        throw Error("mesh: element " + std::to_string(e) + " references missing node " + std::to_string(n));
    for (int k = 0; k < 6; ++k) {
      const auto& el = m.elements[e];
      const Vec3 expect = 0.5 * (m.nodes[el[kEdges[k][0]]] + m.nodes[el[kEdges[k][1]]]);
      const double scale = 1.0 + (m.nodes[el[kEdges[k][0]]] - m.nodes[el[kEdges[k][1]]]).norm();
      if ((m.nodes[el[4 + k]] - expect).norm() > 1e-9 * scale)
        throw Error("mesh: element " + std::to_string(e) + " has a mid-edge node off its edge midpoint");
    }
  }
  for (const auto* set : {&m.top, &m.bottom})
    for (int n : *set)
      if (n < 0 || n >= nn) throw Error("mesh: node set references missing node " + std::to_string(n));
  check_faces(m, m.luminal, "LUMINAL");
  check_faces(m, m.interface, "INTERFACE");
  if (m.has_columns() && (m.column_vertex.size() != m.nodes.size() || m.column_position.size() != m.nodes.size()))
    throw Error("mesh: column arrays do not match node count");
}

TetMesh without_ilt(const TetMesh& m) {
  TetMesh out;
  std::vector<int> node_map(m.nodes.size(), -1), elem_map(m.elements.size(), -1);
  for (std::size_t e = 0; e < m.elements.size(); ++e) {
    if (m.regions[e] != Region::Wall) continue;
    elem_map[e] = static_cast<int>(out.elements.size());
    out.elements.push_back(m.elements[e]);
    out.regions.push_back(Region::Wall);
  }
  // Keep the original node order among the survivors.
  std::vector<char> used(m.nodes.size(), 0);
  for (const auto& el : out.elements)
    for (int n : el) used[n] = 1;
  for (std::size_t n = 0; n < m.nodes.size(); ++n)
    if (used[n]) {
      node_map[n] = static_cast<int>(out.nodes.size());
      out.nodes.push_back(m.nodes[n]);
    }
  for (auto& el : out.elements)
    for (int& n : el) n = node_map[n];
  for (const auto* src : {&m.top, &m.bottom}) {
    auto& dst = src == &m.top ? out.top : out.bottom;
    for (int n : *src)
      if (node_map[n] >= 0) dst.push_back(node_map[n]);
  }
  auto remap_faces = [&](const std::vector<FaceRef>& faces) {
    std::vector<FaceRef> r;
    for (const auto& f : faces)
      if (elem_map[f.element] >= 0) r.push_back({elem_map[f.element], f.face});
    return r;
  };
  out.luminal = remap_faces(m.luminal);
  for (const auto& f : remap_faces(m.interface)) out.luminal.push_back(f);
  std::sort(out.luminal.begin(), out.luminal.end());
  if (m.has_columns()) {
    out.column_vertex.resize(out.nodes.size());
    out.column_position.resize(out.nodes.size());
    for (std::size_t n = 0; n < m.nodes.size(); ++n)
      if (node_map[n] >= 0) {
        out.column_vertex[node_map[n]] = m.column_vertex[n];
        out.column_position[node_map[n]] = m.column_position[n];
      }
  }
  return out;
}

}  // namespace aaa::meshing
