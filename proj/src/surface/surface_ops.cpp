#include "aaa/surface.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <unordered_map>

namespace aaa::surface {
namespace {

std::uint64_t edge_key(int a, int b) {
  const auto lo = static_cast<std::uint64_t>(std::min(a, b));
  const auto hi = static_cast<std::uint64_t>(std::max(a, b));
  return (lo << 32) | hi;
}

/// Sorted, de-duplicated 1-ring neighbours of every vertex.
std::vector<std::vector<int>> vertex_neighbours(const TriSurface& s) {
  std::vector<std::vector<int>> nb(s.vertices.size());
  for (const auto& t : s.triangles)
    for (int e = 0; e < 3; ++e) {
      nb[t[e]].push_back(t[(e + 1) % 3]);
      nb[t[e]].push_back(t[(e + 2) % 3]);
    }
  for (auto& n : nb) {
    std::sort(n.begin(), n.end());
    n.erase(std::unique(n.begin(), n.end()), n.end());
  }
  return nb;
}

Vec3 triangle_normal(const TriSurface& s, const std::array<int, 3>& t) {
  return (s.vertices[t[1]] - s.vertices[t[0]]).cross(s.vertices[t[2]] - s.vertices[t[0]]);
}

bool on_plane(double z, const std::optional<double>& plane, double tol) {
  return plane && std::abs(z - *plane) <= tol;
}

/// Segment [p, q] against triangle (a, b, c); true if they cross.
bool segment_hits_triangle(const Vec3& p, const Vec3& q, const Vec3& a, const Vec3& b, const Vec3& c,
                           double eps) {
  const Vec3 dir = q - p;
  const Vec3 e1 = b - a, e2 = c - a;
  const Vec3 h = dir.cross(e2);
  const double det = e1.dot(h);
  const double scale = e1.norm() * e2.norm() * dir.norm();
  if (std::abs(det) <= 1e-12 * scale) return false;  // parallel or coplanar
  const double inv = 1.0 / det;
  const Vec3 sv = p - a;
  const double u = sv.dot(h) * inv;
  if (u < -eps || u > 1.0 + eps) return false;
  const Vec3 qv = sv.cross(e1);
  const double v = dir.dot(qv) * inv;
  if (v < -eps || u + v > 1.0 + eps) return false;
  const double t = e2.dot(qv) * inv;
  return t > eps && t < 1.0 - eps;
}

bool triangles_intersect(const TriSurface& s, int i, int j) {
  const auto& ti = s.triangles[i];
  const auto& tj = s.triangles[j];
  const auto& P = s.vertices;
  constexpr double eps = 1e-9;
  for (int e = 0; e < 3; ++e) {
    if (segment_hits_triangle(P[ti[e]], P[ti[(e + 1) % 3]], P[tj[0]], P[tj[1]], P[tj[2]], eps)) return true;
    if (segment_hits_triangle(P[tj[e]], P[tj[(e + 1) % 3]], P[ti[0]], P[ti[1]], P[ti[2]], eps)) return true;
  }
  return false;
}

}  // namespace

std::vector<Vec3> compute_normals(const TriSurface& s) {
  std::vector<Vec3> n(s.vertices.size(), Vec3::Zero());
  for (const auto& t : s.triangles) {
    const Vec3 a = triangle_normal(s, t);  // |a| = 2 * area
    for (int v : t) n[v] += a;
  }
  for (auto& x : n) {
    const double len = x.norm();
    if (len > 0.0) x /= len;
  }
  return n;
}

void update_normals(TriSurface& s) { s.normals = compute_normals(s); }

double area(const TriSurface& s) {
  double a = 0.0;
  for (const auto& t : s.triangles) a += 0.5 * triangle_normal(s, t).norm();
  return a;
}

double enclosed_volume(const TriSurface& s) {
  double v = 0.0;
  for (const auto& t : s.triangles)
    v += s.vertices[t[0]].dot(s.vertices[t[1]].cross(s.vertices[t[2]])) / 6.0;
  return v;
}

int euler_characteristic(const TriSurface& s) {
  std::set<std::uint64_t> edges;
  std::vector<char> used(s.vertices.size(), 0);
  for (const auto& t : s.triangles)
    for (int e = 0; e < 3; ++e) {
      edges.insert(edge_key(t[e], t[(e + 1) % 3]));
      used[t[e]] = 1;
    }
  const auto nv = std::count(used.begin(), used.end(), 1);
  return static_cast<int>(nv) - static_cast<int>(edges.size()) + static_cast<int>(s.triangles.size());
}

std::vector<std::pair<int, int>> boundary_edges(const TriSurface& s) {
  std::map<std::uint64_t, std::pair<int, std::pair<int, int>>> count;
  for (const auto& t : s.triangles)
    for (int e = 0; e < 3; ++e) {
      auto& entry = count[edge_key(t[e], t[(e + 1) % 3])];
      ++entry.first;
      entry.second = {t[e], t[(e + 1) % 3]};
    }
  std::vector<std::pair<int, int>> out;
  for (const auto& [k, v] : count)
    if (v.first == 1) out.push_back(v.second);
  return out;
}

bool is_closed_manifold(const TriSurface& s) {
  // Every directed edge must appear exactly once and its reverse exactly once.
  std::unordered_map<std::uint64_t, int> directed;
  for (const auto& t : s.triangles)
    for (int e = 0; e < 3; ++e) {
      const auto a = static_cast<std::uint64_t>(t[e]), b = static_cast<std::uint64_t>(t[(e + 1) % 3]);
      if (++directed[(a << 32) | b] > 1) return false;
    }
  for (const auto& [k, n] : directed)
    if (!directed.count(((k & 0xffffffffu) << 32) | (k >> 32))) return false;
  return true;
}

std::vector<int> ring_membership(const TriSurface& s) {
  std::vector<int> ring(s.vertices.size(), 0);
  const auto edges = boundary_edges(s);
  for (const auto& [a, b] : edges)
    for (int v : {a, b}) {
      const double z = s.vertices[v].z();
      if (on_plane(z, s.ends.z_max, s.ends.tolerance)) {
        ring[v] = 2;
      } else if (on_plane(z, s.ends.z_min, s.ends.tolerance)) {
        ring[v] = 1;
      } else {
        ring[v] = 3;
      }
    }
  return ring;
}

TriSurface laplacian_smooth(const TriSurface& s, int iterations, double lambda) {
  if (iterations < 0) throw Error("laplacian_smooth: iterations must be non-negative");
  if (!(lambda > 0.0 && lambda < 1.0)) throw Error("laplacian_smooth: lambda must lie in (0,1)");
  TriSurface out = s;
  if (iterations == 0) return out;
  const auto nb = vertex_neighbours(s);
  const auto ring = ring_membership(s);
  // Ring vertices are smoothed along their ring only.
  std::vector<std::vector<int>> ring_nb(s.vertices.size());
  for (const auto& [a, b] : boundary_edges(s)) {
    ring_nb[a].push_back(b);
    ring_nb[b].push_back(a);
  }
  std::vector<Vec3> next(out.vertices.size());
  for (int it = 0; it < iterations; ++it) {
    for (std::size_t v = 0; v < out.vertices.size(); ++v) {
      const auto& n = ring[v] ? ring_nb[v] : nb[v];
      if (n.empty() || ring[v] == 3) {
        next[v] = out.vertices[v];
        continue;
      }
      Vec3 c = Vec3::Zero();
      for (int w : n) c += out.vertices[w];
      c /= static_cast<double>(n.size());
      next[v] = out.vertices[v] + lambda * (c - out.vertices[v]);
      if (ring[v]) next[v].z() = out.vertices[v].z();
    }
    out.vertices.swap(next);
  }
  update_normals(out);
  return out;
}

std::vector<Vec3> inward_directions(const TriSurface& s) {
  const auto normals = compute_normals(s);
  const auto ring = ring_membership(s);
  std::vector<Vec3> dir(normals.size());
  for (std::size_t v = 0; v < normals.size(); ++v) {
    Vec3 d = -normals[v];
    if (ring[v] == 1 || ring[v] == 2) {
      d.z() = 0.0;
      const double len = d.norm();
      if (len > 0.0) d /= len;
    }
    dir[v] = d;
  }
  return dir;
}

TriSurface offset_inward(const TriSurface& s, double thickness) {
  if (thickness < 0.0) throw Error("offset_inward: thickness must be non-negative");
  TriSurface out = s;
  if (thickness == 0.0) return out;
  const auto dir = inward_directions(s);
  for (std::size_t v = 0; v < out.vertices.size(); ++v) out.vertices[v] += thickness * dir[v];
  // A triangle whose orientation flips has passed through a focal point.
  for (std::size_t t = 0; t < s.triangles.size(); ++t) {
    const Vec3 before = triangle_normal(s, s.triangles[t]);
    const Vec3 after = triangle_normal(out, out.triangles[t]);
    if (before.dot(after) <= 0.0) {
      // Name a neighbour sharing an edge to report a pair.
      int other = -1;
      for (std::size_t u = 0; u < s.triangles.size() && other < 0; ++u) {
        if (u == t) continue;
        int shared = 0;
        for (int a : s.triangles[t])
          for (int b : s.triangles[u]) shared += a == b;
        if (shared == 2) other = static_cast<int>(u);
      }
      throw Error("offset_inward: self-intersection, triangles " + std::to_string(t) + " and " +
                  std::to_string(other) + " (triangle " + std::to_string(t) + " folded over)");
    }
  }
  if (auto hit = find_self_intersection(out))
    throw Error("offset_inward: self-intersection, triangles " + std::to_string(hit->first) + " and " +
                std::to_string(hit->second));
  update_normals(out);
  return out;
}

std::optional<std::pair<int, int>> find_self_intersection(const TriSurface& s) {
  if (s.triangles.empty()) return std::nullopt;
  Vec3 lo = s.vertices[s.triangles[0][0]], hi = lo;
  double edge_sum = 0.0;
  for (const auto& t : s.triangles)
    for (int e = 0; e < 3; ++e) {
      lo = lo.cwiseMin(s.vertices[t[e]]);
      hi = hi.cwiseMax(s.vertices[t[e]]);
      edge_sum += (s.vertices[t[e]] - s.vertices[t[(e + 1) % 3]]).norm();
    }
  const double cell = std::max(2.0 * edge_sum / (3.0 * s.triangles.size()), 1e-6);
  auto cell_of = [&](double x, double origin) { return static_cast<int>(std::floor((x - origin) / cell)); };
  std::unordered_map<std::uint64_t, std::vector<int>> grid;
  auto hash = [](int i, int j, int k) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(i)) * 73856093u) ^
           (static_cast<std::uint64_t>(static_cast<std::uint32_t>(j)) * 19349663u << 20) ^
           (static_cast<std::uint64_t>(static_cast<std::uint32_t>(k)) * 83492791u << 40);
  };
  std::vector<std::array<int, 6>> boxes(s.triangles.size());
  for (std::size_t t = 0; t < s.triangles.size(); ++t) {
    Vec3 a = s.vertices[s.triangles[t][0]], b = a;
    for (int v : s.triangles[t]) {
      a = a.cwiseMin(s.vertices[v]);
      b = b.cwiseMax(s.vertices[v]);
    }
    auto& box = boxes[t];
    for (int d = 0; d < 3; ++d) {
      box[d] = cell_of(a[d], lo[d]);
      box[d + 3] = cell_of(b[d], lo[d]);
    }
    for (int k = box[2]; k <= box[5]; ++k)
      for (int j = box[1]; j <= box[4]; ++j)
        for (int i = box[0]; i <= box[3]; ++i) grid[hash(i, j, k)].push_back(static_cast<int>(t));
  }
  std::vector<int> candidates;
  for (std::size_t t = 0; t < s.triangles.size(); ++t) {
    candidates.clear();
    const auto& box = boxes[t];
    for (int k = box[2]; k <= box[5]; ++k)
      for (int j = box[1]; j <= box[4]; ++j)
        for (int i = box[0]; i <= box[3]; ++i)
          for (int u : grid[hash(i, j, k)])
            if (u > static_cast<int>(t)) candidates.push_back(u);
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    for (int u : candidates) {
      bool adjacent = false;
      for (int a : s.triangles[t])
        for (int b : s.triangles[u]) adjacent |= a == b;
      if (adjacent) continue;
      if (triangles_intersect(s, static_cast<int>(t), u)) return std::pair{static_cast<int>(t), u};
    }
  }
  return std::nullopt;
}

EndRings identify_end_rings(const TriSurface& s) {
  EndRings rings;
  for (std::size_t v = 0; v < s.vertices.size(); ++v) {
    const double z = s.vertices[v].z();
    if (on_plane(z, s.ends.z_max, s.ends.tolerance)) rings.top.push_back(static_cast<int>(v));
    if (on_plane(z, s.ends.z_min, s.ends.tolerance)) rings.bottom.push_back(static_cast<int>(v));
  }
  if (rings.top.empty() && rings.bottom.empty())
    throw Error("identify_end_rings: no vertices lie on an end plane");
  return rings;
}

TriSurface open_ends(const TriSurface& s) {
  const auto rings = identify_end_rings(s);
  std::vector<int> plane(s.vertices.size(), 0);
  for (int v : rings.bottom) plane[v] = 1;
  for (int v : rings.top) plane[v] = 2;
  TriSurface out;
  out.ends = s.ends;
  std::vector<int> remap(s.vertices.size(), -1);
  for (const auto& t : s.triangles) {
    if (plane[t[0]] != 0 && plane[t[0]] == plane[t[1]] && plane[t[1]] == plane[t[2]]) continue;
    std::array<int, 3> nt{};
    for (int e = 0; e < 3; ++e) {
      if (remap[t[e]] < 0) {
        remap[t[e]] = static_cast<int>(out.vertices.size());
        out.vertices.push_back(s.vertices[t[e]]);
      }
      nt[e] = remap[t[e]];
    }
    out.triangles.push_back(nt);
  }
  if (out.triangles.empty()) throw Error("open_ends: surface consists only of end caps");
  for (int r : ring_membership(out))
    if (r == 3) throw Error("open_ends: surface has an opening away from its end planes");
  update_normals(out);
  return out;
}

}  // namespace aaa::surface
