// Marching cubes on a binary indicator.
//
// Instead of a 256-entry triangle table, each cube's polygons are traced from
// its faces: on every face the crossing points are paired into directed
// segments, and the segments chain into closed loops inside the cube. A face
// is shared by two cubes which pair its crossings identically, so the
// surface is watertight. Ambiguous faces (diagonal foreground corners) keep
// the foreground corners connected, and a cube whose only foreground corners
// sit on a body diagonal gets a connecting band. The surface therefore
// bounds the 26-connected foreground / 6-connected background.

#include "aaa/surface.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace aaa::surface {
namespace {

using volume::BinaryMask;
using volume::Grid;

// Corner c of the unit cube sits at (c & 1, (c >> 1) & 1, (c >> 2) & 1).
Eigen::Vector3i corner_offset(int c) { return {c & 1, (c >> 1) & 1, (c >> 2) & 1}; }

struct CubeTopology {
  // faces[f] lists four corners counter-clockwise seen from outside.
  std::array<std::array<int, 4>, 6> faces{};
};

CubeTopology make_topology() {
  CubeTopology t;
  int f = 0;
  for (int axis = 0; axis < 3; ++axis)
    for (int side = 0; side < 2; ++side) {
      std::array<int, 4> ring{};
      int n = 0;
      for (int c = 0; c < 8; ++c)
        if (corner_offset(c)[axis] == side) ring[n++] = c;
      // Put the four corners in cyclic order around the face.
      std::swap(ring[2], ring[3]);
      const Eigen::Vector3d p0 = corner_offset(ring[0]).cast<double>();
      const Eigen::Vector3d p1 = corner_offset(ring[1]).cast<double>();
      const Eigen::Vector3d p2 = corner_offset(ring[2]).cast<double>();
      Eigen::Vector3d outward = Eigen::Vector3d::Zero();
      outward[axis] = side == 0 ? -1.0 : 1.0;
      if ((p1 - p0).cross(p2 - p1).dot(outward) < 0.0) std::swap(ring[1], ring[3]);
      t.faces[f++] = ring;
    }
  return t;
}

const CubeTopology& topology() {
  static const CubeTopology t = make_topology();
  return t;
}

/// Global id of a lattice edge of the padded grid: lower corner + axis.
struct EdgeKey {
  std::uint64_t operator()(int i, int j, int k, int axis, const std::array<int, 3>& pd) const {
    const std::uint64_t v =
        (static_cast<std::uint64_t>(k + 1) * (pd[1]) + static_cast<std::uint64_t>(j + 1)) * pd[0] +
        static_cast<std::uint64_t>(i + 1);
    return v * 3 + static_cast<std::uint64_t>(axis);
  }
};

double tri_area2(const Vec3& a, const Vec3& b, const Vec3& c) { return (b - a).cross(c - a).squaredNorm(); }

/// True if the cube edges (a0,a1) and (b0,b1) lie on a common cube face.
bool share_face(std::array<int, 2> a, std::array<int, 2> b) {
  for (int axis = 0; axis < 3; ++axis)
    for (int side = 0; side < 2; ++side) {
      bool all = true;
      for (int c : {a[0], a[1], b[0], b[1]}) all &= corner_offset(c)[axis] == side;
      if (all) return true;
    }
  return false;
}

/// Triangulates one loop of crossing points. Fans whose diagonals would run
/// along a cube face are skipped: the neighbouring cube may pick the same
/// diagonal, which would make the edge non-manifold. Among the remaining fan
/// apexes the one maximising the smallest triangle wins; with none left the
/// loop is fanned around its centroid.
void triangulate_loop(const std::vector<int>& loop, const std::vector<std::array<int, 2>>& edges,
                      std::vector<Vec3>& pts, std::vector<std::array<int, 3>>& out) {
  const int n = static_cast<int>(loop.size());
  if (n < 3) return;
  int best = -1;
  double best_min = -1.0;
  for (int s = 0; s < n; ++s) {
    bool ok = true;
    for (int m = 2; m + 1 < n && ok; ++m) ok = !share_face(edges[s], edges[(s + m) % n]);
    if (!ok) continue;
    double worst = std::numeric_limits<double>::infinity();
    for (int m = 1; m + 1 < n; ++m)
      worst = std::min(worst, tri_area2(pts[loop[s]], pts[loop[(s + m) % n]], pts[loop[(s + m + 1) % n]]));
    if (worst > best_min * (1.0 + 1e-12)) {
      best_min = worst;
      best = s;
    }
  }
  if (best >= 0) {
    for (int m = 1; m + 1 < n; ++m) out.push_back({loop[best], loop[(best + m) % n], loop[(best + m + 1) % n]});
    return;
  }
  Vec3 c = Vec3::Zero();
  for (int v : loop) c += pts[v];
  const int centre = static_cast<int>(pts.size());
  pts.push_back(c / n);
  for (int m = 0; m < n; ++m) out.push_back({centre, loop[m], loop[(m + 1) % n]});
}

/// Two foreground corners on a body diagonal touch only at a point. Under
/// 26-connectivity they are one object, so their corner caps are joined by
/// a six-triangle band instead of being closed off separately.
void join_diagonal_caps(const std::vector<int>& a, const std::vector<int>& b, const std::vector<Vec3>& pts,
                        Vec3 axis, std::vector<std::array<int, 3>>& out) {
  axis.normalize();
  Vec3 centre = Vec3::Zero();
  for (int v : a) centre += pts[v];
  for (int v : b) centre += pts[v];
  centre /= 6.0;
  const Vec3 u = axis.unitOrthogonal(), w = axis.cross(u);
  std::vector<std::pair<double, int>> ring;  // (angle, loop tag * 8 + position)
  for (int r = 0; r < 2; ++r)
    for (int k = 0; k < 3; ++k) {
      const Vec3 d = pts[(r ? b : a)[k]] - centre;
      ring.push_back({std::atan2(d.dot(w), d.dot(u)), r * 8 + k});
    }
  std::sort(ring.begin(), ring.end());
  auto vertex = [&](int tag) { return (tag >= 8 ? b : a)[tag % 8]; };
  std::vector<std::array<int, 3>> band;
  for (int k = 0; k < 6; ++k) {
    std::array<int, 3> t{vertex(ring[k].second), vertex(ring[(k + 1) % 6].second), vertex(ring[(k + 2) % 6].second)};
    if (k % 2) std::swap(t[0], t[2]);  // strip triangles alternate
    band.push_back(t);
  }
  // Each band triangle carries one loop edge, from its third vertex to its
  // first; it must run the same way as the loop itself.
  const auto& t = band[0];
  const auto& loop = std::find(a.begin(), a.end(), t[0]) != a.end() ? a : b;
  const auto i0 = std::find(loop.begin(), loop.end(), t[2]) - loop.begin();
  const bool forward = loop[(i0 + 1) % 3] == t[0];
  for (auto tri : band) {
    if (!forward) std::swap(tri[1], tri[2]);
    out.push_back(tri);
  }
}

}  // namespace

TriSurface extract_isosurface(const BinaryMask& mask) {
  const Grid& g = mask.grid();
  if (mask.empty()) throw Error("extract_isosurface: mask is empty");
  const auto& topo = topology();
  const auto [nx, ny, nz] = g.dims;
  const std::array<int, 3> padded{nx + 2, ny + 2, nz + 2};
  auto value = [&](int i, int j, int k) { return g.contains(i, j, k) && mask.at(i, j, k) ? 1 : 0; };

  TriSurface s;
  std::unordered_map<std::uint64_t, int> edge_vertex;
  EdgeKey key;
  auto vertex_on = [&](int i, int j, int k, int axis) {
    const std::uint64_t id = key(i, j, k, axis, padded);
    auto [it, inserted] = edge_vertex.try_emplace(id, static_cast<int>(s.vertices.size()));
    if (inserted) {
      Vec3 p = g.center(i, j, k);
      p[axis] += 0.5 * g.spacing[axis];
      s.vertices.push_back(p);
    }
    return it->second;
  };

  std::array<int, 8> v{};
  std::array<int, 12> next{};
  std::array<int, 12> point{};
  std::array<std::array<int, 2>, 12> slot_edge{};
  std::vector<int> loop;
  std::vector<std::array<int, 2>> edges;
  for (int k = -1; k < nz; ++k)
    for (int j = -1; j < ny; ++j)
      for (int i = -1; i < nx; ++i) {
        int inside = 0;
        for (int c = 0; c < 8; ++c) {
          const auto o = corner_offset(c);
          v[c] = value(i + o.x(), j + o.y(), k + o.z());
          inside += v[c];
        }
        if (inside == 0 || inside == 8) continue;

        // Crossing points are indexed by a local edge slot (corner pair).
        std::unordered_map<int, int> slot_of;  // a*8+b (a<b) -> slot
        int nslots = 0;
        auto slot = [&](int a, int b) {
          const int id = std::min(a, b) * 8 + std::max(a, b);
          auto [it, inserted] = slot_of.try_emplace(id, nslots);
          if (inserted) {
            const auto oa = corner_offset(std::min(a, b));
            const auto ob = corner_offset(std::max(a, b));
            int axis = 0;
            while (oa[axis] == ob[axis]) ++axis;
            point[nslots] = vertex_on(i + oa.x(), j + oa.y(), k + oa.z(), axis);
            next[nslots] = -1;
            slot_edge[nslots] = {a, b};
            ++nslots;
          }
          return it->second;
        };

        for (const auto& face : topo.faces) {
          // Crossings in counter-clockwise order; exit = inside -> outside.
          std::array<int, 4> slots{};
          std::array<bool, 4> exits{};
          int n = 0;
          for (int e = 0; e < 4; ++e) {
            const int a = face[e], b = face[(e + 1) % 4];
            if (v[a] == v[b]) continue;
            slots[n] = slot(a, b);
            exits[n] = v[a] == 1;
            ++n;
          }
          // Each exit pairs with the following crossing; the surface runs
          // from that entry back to the exit.
          for (int m = 0; m < n; ++m)
            if (exits[m]) next[slots[(m + 1) % n]] = slots[m];
        }

        std::array<bool, 12> used{};
        std::vector<std::vector<int>> loops;
        std::vector<std::vector<std::array<int, 2>>> loop_edges;
        for (int start = 0; start < nslots; ++start) {
          if (used[start]) continue;
          loop.clear();
          edges.clear();
          int cur = start;
          while (!used[cur]) {
            used[cur] = true;
            loop.push_back(point[cur]);
            edges.push_back(slot_edge[cur]);
            cur = next[cur];
            if (cur < 0) throw Error("extract_isosurface: open polygon loop");
          }
          loops.push_back(loop);
          loop_edges.push_back(edges);
        }
        int first = -1;
        for (int c = 0; c < 8 && first < 0; ++c)
          if (v[c]) first = c;
        if (inside == 2 && v[7 - first]) {
          const Vec3 axis = (corner_offset(7 - first) - corner_offset(first)).cast<double>();
          join_diagonal_caps(loops[0], loops[1], s.vertices, axis, s.triangles);
          continue;
        }
        for (std::size_t l = 0; l < loops.size(); ++l)
          triangulate_loop(loops[l], loop_edges[l], s.vertices, s.triangles);
      }

  auto touches = [&](int k) {
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i)
        if (mask.at(i, j, k)) return true;
    return false;
  };
  s.ends.tolerance = 0.25 * g.spacing.z();
  if (touches(0)) s.ends.z_min = g.origin.z() - 0.5 * g.spacing.z();
  if (touches(nz - 1)) s.ends.z_max = g.origin.z() + (nz - 0.5) * g.spacing.z();
  update_normals(s);
  return s;
}

}  // namespace aaa::surface
