#pragma once

#include "aaa/meshing.hpp"

#include <algorithm>
#include <map>
#include <vector>

namespace fixture {

/// Straight-sided quadratic mesh from corner tets, all tagged WALL.
inline aaa::meshing::TetMesh from_corners(const std::vector<aaa::Vec3>& pts,
                                          const std::vector<std::array<int, 4>>& tets) {
  static constexpr int edges[6][2] = {{0, 1}, {1, 2}, {0, 2}, {0, 3}, {1, 3}, {2, 3}};
  aaa::meshing::TetMesh m;
  m.nodes = pts;
  std::map<std::pair<int, int>, int> mid;
  for (const auto& t : tets) {
    aaa::meshing::Tet10 el{};
    for (int c = 0; c < 4; ++c) el[c] = t[c];
    for (int k = 0; k < 6; ++k) {
      const auto key = std::minmax(t[edges[k][0]], t[edges[k][1]]);
      auto [it, inserted] = mid.try_emplace(key, static_cast<int>(m.nodes.size()));
      if (inserted) m.nodes.push_back(0.5 * (m.nodes[key.first] + m.nodes[key.second]));
      el[4 + k] = it->second;
    }
    m.elements.push_back(el);
    m.regions.push_back(aaa::meshing::Region::Wall);
  }
  return m;
}

/// Box [0,a]x[0,b]x[0,c] cut into 5 positively oriented tets. Corner i sits
/// at (i&1, (i>>1)&1, (i>>2)&1) scaled by the box size.
inline aaa::meshing::TetMesh five_tet_box(double a = 1.0, double b = 1.0, double c = 1.0) {
  std::vector<aaa::Vec3> pts;
  for (int i = 0; i < 8; ++i) pts.emplace_back(a * (i & 1), b * ((i >> 1) & 1), c * ((i >> 2) & 1));
  std::vector<std::array<int, 4>> tets{{1, 2, 4, 7}, {0, 1, 2, 4}, {3, 1, 2, 7}, {5, 1, 4, 7}, {6, 2, 4, 7}};
  for (auto& t : tets) {
    const double v = (pts[t[1]] - pts[t[0]]).cross(pts[t[2]] - pts[t[0]]).dot(pts[t[3]] - pts[t[0]]);
    if (v < 0) std::swap(t[1], t[2]);
  }
  return from_corners(pts, tets);
}

}  // namespace fixture
