#include "aaa/meshing.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <unordered_map>

namespace aaa::meshing {
namespace {

using surface::TriSurface;

struct Hit {
  double t = 0.0;
  int triangle = -1;
};

/// Moller-Trumbore, two-sided.
std::optional<double> ray_triangle(const Vec3& p, const Vec3& d, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 e1 = b - a, e2 = c - a;
  const Vec3 h = d.cross(e2);
  const double det = e1.dot(h);
  if (std::abs(det) < 1e-14 * e1.norm() * e2.norm()) return std::nullopt;
  const double inv = 1.0 / det;
  const Vec3 s = p - a;
  const double u = s.dot(h) * inv;
  if (u < -1e-12 || u > 1.0 + 1e-12) return std::nullopt;
  const Vec3 q = s.cross(e1);
  const double v = d.dot(q) * inv;
  if (v < -1e-12 || u + v > 1.0 + 1e-12) return std::nullopt;
  return e2.dot(q) * inv;
}

/// Bounding-volume hierarchy over the triangles of one surface.
class Bvh {
 public:
  explicit Bvh(const TriSurface& s) : s_(s), order_(s.triangles.size()) {
    std::iota(order_.begin(), order_.end(), 0);
    centroid_.resize(s.triangles.size());
    for (std::size_t t = 0; t < s.triangles.size(); ++t) {
      const auto& tri = s.triangles[t];
      centroid_[t] = (s.vertices[tri[0]] + s.vertices[tri[1]] + s.vertices[tri[2]]) / 3.0;
    }
    if (!order_.empty()) build(0, static_cast<int>(order_.size()));
  }

  /// Nearest hit with t > t_min.
  std::optional<Hit> first_hit(const Vec3& p, const Vec3& d, double t_min) const {
    std::optional<Hit> best;
    if (nodes_.empty()) return best;
    std::vector<int> stack{0};
    while (!stack.empty()) {
      const Node& n = nodes_[stack.back()];
      stack.pop_back();
      const double limit = best ? best->t : std::numeric_limits<double>::infinity();
      if (!slab(n.box, p, d, limit)) continue;
      if (n.left < 0) {
        for (int k = n.begin; k < n.end; ++k) {
          const auto& tri = s_.triangles[order_[k]];
          const auto t = ray_triangle(p, d, s_.vertices[tri[0]], s_.vertices[tri[1]], s_.vertices[tri[2]]);
          if (t && *t > t_min && (!best || *t < best->t)) best = Hit{*t, order_[k]};
        }
      } else {
        stack.push_back(n.left);
        stack.push_back(n.right);
      }
    }
    return best;
  }

 private:
  struct Node {
    Eigen::AlignedBox3d box;
    int left = -1, right = -1, begin = 0, end = 0;
  };

  int build(int begin, int end) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({});
    Eigen::AlignedBox3d box, cbox;
    for (int k = begin; k < end; ++k) {
      for (int v : s_.triangles[order_[k]]) box.extend(s_.vertices[v]);
      cbox.extend(centroid_[order_[k]]);
    }
    nodes_[id].box = box;
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    if (end - begin <= 8) return id;
    int axis = 0;
    cbox.sizes().maxCoeff(&axis);
    const int mid = (begin + end) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](int a, int b) { return centroid_[a][axis] < centroid_[b][axis]; });
    const int left = build(begin, mid);
    const int right = build(mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  static bool slab(const Eigen::AlignedBox3d& box, const Vec3& p, const Vec3& d, double limit) {
    double lo = 0.0, hi = limit;
    for (int a = 0; a < 3; ++a) {
      const double pad = 1e-9 * (1.0 + box.sizes()[a]);
      if (std::abs(d[a]) < 1e-300) {
        if (p[a] < box.min()[a] - pad || p[a] > box.max()[a] + pad) return false;
        continue;
      }
      double t0 = (box.min()[a] - pad - p[a]) / d[a], t1 = (box.max()[a] + pad - p[a]) / d[a];
      if (t0 > t1) std::swap(t0, t1);
      lo = std::max(lo, t0);
      hi = std::min(hi, t1);
      if (lo > hi) return false;
    }
    return true;
  }

  const TriSurface& s_;
  std::vector<int> order_;
  std::vector<Vec3> centroid_;
  std::vector<Node> nodes_;
};

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  // Voronoi-region walk (Ericson, Real-Time Collision Detection 5.1.5).
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return a;
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) return a + d1 / (d1 - d3) * ab;
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) return a + d2 / (d2 - d6) * ac;
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) return b + (d4 - d3) / ((d4 - d3) + (d5 - d6)) * (c - b);
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

Vec3 triangle_normal(const TriSurface& s, int t) {
  const auto& tri = s.triangles[t];
  return (s.vertices[tri[1]] - s.vertices[tri[0]]).cross(s.vertices[tri[2]] - s.vertices[tri[0]]);
}

/// Where the inward ray from an external vertex meets the lumen.
struct Column {
  Vec3 lumen_point = Vec3::Zero();
  double distance = 0.0;
  bool fallback = false;
};

class LumenCaster {
 public:
  explicit LumenCaster(const TriSurface& lumen) : lumen_(lumen), bvh_(lumen) {
    const auto ring = surface::ring_membership(lumen);
    // Boundary edges with the triangle that owns them, per end plane.
    std::unordered_map<std::uint64_t, int> owner;
    for (std::size_t t = 0; t < lumen.triangles.size(); ++t)
      for (int e = 0; e < 3; ++e) {
        const int a = lumen.triangles[t][e], b = lumen.triangles[t][(e + 1) % 3];
        owner[key(a, b)] = static_cast<int>(t);
      }
    for (const auto& [a, b] : surface::boundary_edges(lumen)) {
      if (ring[a] != ring[b] || (ring[a] != 1 && ring[a] != 2)) continue;
      rings_[ring[a] - 1].push_back({a, b, owner.at(key(a, b))});
    }
  }

  Column cast(const Vec3& p, const Vec3& dir, int plane) const {
    std::optional<Hit> hit;
    if (plane == 1 || plane == 2) hit = ring_hit(p, dir, rings_[plane - 1]);
    if (!hit) hit = bvh_.first_hit(p, dir, 1e-9);
    Column c;
    if (hit) {
      // Leaving the lumen first means the vertex already sits inside it.
      if (triangle_normal(lumen_, hit->triangle).dot(dir) > 0.0) {
        c.lumen_point = p;
        c.distance = 0.0;
      } else {
        c.lumen_point = p + hit->t * dir;
        c.distance = hit->t;
      }
      return c;
    }
    c.fallback = true;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& tri : lumen_.triangles) {
      const Vec3 q = closest_point_on_triangle(p, lumen_.vertices[tri[0]], lumen_.vertices[tri[1]],
                                               lumen_.vertices[tri[2]]);
      const double d2 = (q - p).squaredNorm();
      if (d2 < best) {
        best = d2;
        c.lumen_point = q;
      }
    }
    c.distance = std::sqrt(best);
    if (!(c.distance < std::numeric_limits<double>::infinity()) || (c.lumen_point - p).dot(dir) <= 0.0)
      c.distance = -1.0;
    return c;
  }

 private:
  struct RingEdge {
    int a, b, triangle;
  };

  static std::uint64_t key(int a, int b) {
    return (static_cast<std::uint64_t>(std::min(a, b)) << 32) | static_cast<std::uint32_t>(std::max(a, b));
  }

  std::optional<Hit> ring_hit(const Vec3& p, const Vec3& d, const std::vector<RingEdge>& ring) const {
    std::optional<Hit> best;
    for (const auto& e : ring) {
      const Vec3& a = lumen_.vertices[e.a];
      const Vec3& b = lumen_.vertices[e.b];
      const double ex = b.x() - a.x(), ey = b.y() - a.y();
      const double det = d.x() * (-ey) - d.y() * (-ex);
      if (std::abs(det) < 1e-14) continue;
      const double rx = a.x() - p.x(), ry = a.y() - p.y();
      const double t = (rx * (-ey) - ry * (-ex)) / det;
      const double u = (d.x() * ry - d.y() * rx) / det;
      if (u < -1e-12 || u > 1.0 + 1e-12 || t <= 1e-9) continue;
      if (!best || t < best->t) best = Hit{t, e.triangle};
    }
    return best;
  }

  const TriSurface& lumen_;
  Bvh bvh_;
  std::array<std::vector<RingEdge>, 2> rings_;
};

double signed_volume(const std::vector<Vec3>& x, const std::array<int, 4>& t) {
  return (x[t[1]] - x[t[0]]).cross(x[t[2]] - x[t[0]]).dot(x[t[3]] - x[t[0]]) / 6.0;
}

std::uint64_t edge_key(int a, int b) {
  return (static_cast<std::uint64_t>(std::min(a, b)) << 32) | static_cast<std::uint32_t>(std::max(a, b));
}

constexpr int kEdges[6][2] = {{0, 1}, {1, 2}, {0, 2}, {0, 3}, {1, 3}, {2, 3}};

/// The face of one of `tets` whose corners are exactly `corners`.
std::optional<FaceRef> find_face(const TetMesh& m, int first_tet, int count, std::array<int, 3> corners) {
  std::sort(corners.begin(), corners.end());
  for (int e = first_tet; e < first_tet + count; ++e)
    for (int f = 0; f < 4; ++f) {
      const auto local = face_local_nodes(f);
      std::array<int, 3> c{m.elements[e][local[0]], m.elements[e][local[1]], m.elements[e][local[2]]};
      std::sort(c.begin(), c.end());
      if (c == corners) return FaceRef{e, f};
    }
  return std::nullopt;
}

}  // namespace

const char* region_name(Region r) { return r == Region::Wall ? "WALL" : "ILT"; }

std::array<int, 6> face_local_nodes(int face) {
  static constexpr std::array<std::array<int, 6>, 4> kFaces{{
      {0, 2, 1, 6, 5, 4},
      {0, 1, 3, 4, 8, 7},
      {1, 2, 3, 5, 9, 8},
      {0, 3, 2, 7, 9, 6},
  }};
  return kFaces.at(face);
}

std::array<int, 6> face_nodes(const Tet10& tet, int face) {
  const auto local = face_local_nodes(face);
  std::array<int, 6> out{};
  for (int k = 0; k < 6; ++k) out[k] = tet[local[k]];
  return out;
}

std::size_t TetMesh::count(Region r) const { return static_cast<std::size_t>(std::count(regions.begin(), regions.end(), r)); }

void LayeredMeshConfig::validate() const {
  if (!(thickness > 0.0)) throw Error("wall thickness must be positive");
  if (wall_layers < 2) throw Error("at least two wall layers are required");
  if (ilt_layers < 1) throw Error("at least one ILT layer is required");
  if (!(ilt_min_thickness >= 0.0)) throw Error("ILT minimum thickness must be non-negative");
  if (ilt_direction_smoothing < 0) throw Error("ILT direction smoothing must be non-negative");
}

namespace {

std::vector<Vec3> smoothed_directions(const TriSurface& s, const std::vector<Vec3>& dir, const std::vector<int>& ring,
                                      int passes) {
  std::vector<std::vector<int>> nbr(s.vertices.size());
  for (const auto& tri : s.triangles)
    for (int e = 0; e < 3; ++e) {
      nbr[tri[e]].push_back(tri[(e + 1) % 3]);
      nbr[tri[(e + 1) % 3]].push_back(tri[e]);
    }
  auto cur = dir;
  std::vector<Vec3> next(dir.size());
  for (int it = 0; it < passes; ++it) {
    for (std::size_t v = 0; v < cur.size(); ++v) {
      Vec3 mean = Vec3::Zero();
      for (int u : nbr[v]) mean += cur[u];
      Vec3 d = cur[v] + (nbr[v].empty() ? Vec3::Zero() : Vec3(mean / static_cast<double>(nbr[v].size())));
      if (ring[v] == 1 || ring[v] == 2) d.z() = 0.0;
      const double len = d.norm();
      next[v] = len > 0.0 ? Vec3(d / len) : cur[v];
    }
    cur.swap(next);
  }
  return cur;
}

}  // namespace

std::array<std::array<int, 4>, 3> prisms_to_tets(const std::array<int, 6>& prism) {
  // Vertex relabelings of the prism that bring vertex k to position 0.
  static constexpr int kMap[6][6] = {
      {0, 1, 2, 3, 4, 5}, {1, 2, 0, 4, 5, 3}, {2, 0, 1, 5, 3, 4},
      {3, 5, 4, 0, 2, 1}, {4, 3, 5, 1, 0, 2}, {5, 4, 3, 2, 1, 0},
  };
  const int lowest = static_cast<int>(std::min_element(prism.begin(), prism.end()) - prism.begin());
  std::array<int, 6> v{};
  for (int k = 0; k < 6; ++k) v[k] = prism[kMap[lowest][k]];
  // Faces through v0 are cut from v0; the opposite quad v1-v2-v5-v4 along
  // the diagonal touching its own lowest id.
  if (std::min(v[1], v[5]) < std::min(v[2], v[4]))
    return {{{v[0], v[1], v[2], v[5]}, {v[0], v[1], v[5], v[4]}, {v[0], v[4], v[5], v[3]}}};
  return {{{v[0], v[1], v[2], v[4]}, {v[0], v[4], v[2], v[5]}, {v[0], v[4], v[5], v[3]}}};
}

TetMesh build_layered_mesh(const TriSurface& wall_ext_in, const TriSurface& lumen_in, const LayeredMeshConfig& cfg,
                           BuildDiagnostics* diagnostics) {
  cfg.validate();
  auto opened = [](const TriSurface& s) {
    const bool clipped = s.ends.z_min || s.ends.z_max;
    return clipped && surface::is_closed_manifold(s) ? surface::open_ends(s) : s;
  };
  const TriSurface ext = opened(wall_ext_in);
  const TriSurface lumen = opened(lumen_in);
  if (ext.triangles.empty() || lumen.triangles.empty()) throw Error("build_layered_mesh: empty surface");

  const int nv = static_cast<int>(ext.vertices.size());
  const int W = cfg.wall_layers, I = cfg.ilt_layers;
  const double t = cfg.thickness;
  const auto dir = surface::inward_directions(ext);
  const auto ring = surface::ring_membership(ext);

  // ILT rays leave the wall's inner nodes along a smoothed direction field.
  // Raw normals wobble by a few degrees, and over thick thrombus that is
  // enough to fold neighbouring columns.
  const auto ilt_dir = smoothed_directions(ext, dir, ring, cfg.ilt_direction_smoothing);

  LumenCaster caster(lumen);
  std::vector<Column> cols(nv);
  std::vector<char> contact(nv, 0);
  BuildDiagnostics diag;
  for (int v = 0; v < nv; ++v) {
    const Vec3 inner = ext.vertices[v] + t * dir[v];
    cols[v] = caster.cast(inner, ilt_dir[v], ring[v]);
    if (cols[v].distance < 0.0)
      throw Error("build_layered_mesh: inward ray from external vertex " + std::to_string(v) +
                  " does not reach the lumen");
    if (cols[v].fallback) diag.fallback_vertices.push_back(v);
    contact[v] = cols[v].distance <= cfg.ilt_min_thickness;
    diag.contact_vertices += contact[v];
  }

  // Triangles get ILT only where all three columns carry it.
  const auto nt = ext.triangles.size();
  std::vector<char> ilt_tri(nt, 0);
  std::vector<int> ilt_index(nv, -1);
  int n_ilt_vertices = 0;
  for (std::size_t f = 0; f < nt; ++f) {
    const auto& tri = ext.triangles[f];
    ilt_tri[f] = !contact[tri[0]] && !contact[tri[1]] && !contact[tri[2]];
  }
  for (std::size_t f = 0; f < nt; ++f)
    if (ilt_tri[f])
      for (int v : ext.triangles[f])
        if (ilt_index[v] < 0) ilt_index[v] = n_ilt_vertices++;

  TetMesh m;
  // Corner nodes: wall level L of vertex v is L*nv + v; ILT levels follow.
  m.nodes.resize(static_cast<std::size_t>(W + 1) * nv + static_cast<std::size_t>(n_ilt_vertices) * I);
  for (int L = 0; L <= W; ++L)
    for (int v = 0; v < nv; ++v) m.nodes[L * nv + v] = ext.vertices[v] + (t * L / W) * dir[v];
  auto level = [&](int v, int L) {
    return L <= W ? L * nv + v : (W + 1) * nv + ilt_index[v] * I + (L - W - 1);
  };
  for (int v = 0; v < nv; ++v) {
    if (ilt_index[v] < 0) continue;
    const Vec3 inner = m.nodes[W * nv + v];
    for (int i = 1; i <= I; ++i) m.nodes[level(v, W + i)] = inner + (cols[v].lumen_point - inner) * (double(i) / I);
  }

  // Prism stacks, three tetrahedra each.
  std::vector<std::array<int, 4>> tets;
  struct Prism {
    int triangle, layer, first_tet;
  };
  std::vector<Prism> prisms;
  for (std::size_t f = 0; f < nt; ++f) {
    const auto& tri = ext.triangles[f];
    const int layers = ilt_tri[f] ? W + I : W;
    for (int L = 0; L < layers; ++L) {
      const std::array<int, 6> prism{level(tri[0], L),     level(tri[1], L),     level(tri[2], L),
                                     level(tri[0], L + 1), level(tri[1], L + 1), level(tri[2], L + 1)};
      prisms.push_back({static_cast<int>(f), L, static_cast<int>(tets.size())});
      for (auto tet : prisms_to_tets(prism)) {
        if (signed_volume(m.nodes, tet) < 0.0) std::swap(tet[1], tet[2]);
        tets.push_back(tet);
        m.regions.push_back(L < W ? Region::Wall : Region::Ilt);
      }
    }
  }

  // Quadratic elevation with straight edges.
  std::unordered_map<std::uint64_t, int> mid;
  mid.reserve(tets.size() * 2);
  m.elements.resize(tets.size());
  for (std::size_t e = 0; e < tets.size(); ++e) {
    auto& el = m.elements[e];
    for (int c = 0; c < 4; ++c) el[c] = tets[e][c];
    for (int k = 0; k < 6; ++k) {
      const int a = tets[e][kEdges[k][0]], b = tets[e][kEdges[k][1]];
      auto [it, inserted] = mid.try_emplace(edge_key(a, b), static_cast<int>(m.nodes.size()));
      if (inserted) m.nodes.push_back(0.5 * (m.nodes[a] + m.nodes[b]));
      el[4 + k] = it->second;
    }
  }

  // Named sets.
  std::vector<char> in_top(m.nodes.size(), 0), in_bottom(m.nodes.size(), 0);
  for (int v = 0; v < nv; ++v) {
    if (ring[v] != 1 && ring[v] != 2) continue;
    auto& flag = ring[v] == 2 ? in_top : in_bottom;
    const int levels = ilt_index[v] >= 0 ? W + I : W;
    for (int L = 0; L <= levels; ++L) flag[level(v, L)] = 1;
  }
  for (const auto& [k, node] : mid) {
    const int a = static_cast<int>(k >> 32), b = static_cast<int>(k & 0xffffffffu);
    in_top[node] = in_top[a] && in_top[b];
    in_bottom[node] = in_bottom[a] && in_bottom[b];
  }
  for (std::size_t n = 0; n < m.nodes.size(); ++n) {
    if (in_top[n]) m.top.push_back(static_cast<int>(n));
    if (in_bottom[n]) m.bottom.push_back(static_cast<int>(n));
  }

  // Triangle adjacency, to find ILT prism sides facing the lumen.
  std::unordered_map<std::uint64_t, std::vector<int>> edge_tris;
  for (std::size_t f = 0; f < nt; ++f)
    for (int e = 0; e < 3; ++e)
      edge_tris[edge_key(ext.triangles[f][e], ext.triangles[f][(e + 1) % 3])].push_back(static_cast<int>(f));

  auto require = [&](std::optional<FaceRef> face) {
    if (!face) throw Error("build_layered_mesh: prism face not found after splitting");
    return *face;
  };
  for (const auto& p : prisms) {
    const auto& tri = ext.triangles[p.triangle];
    const int top_level = p.layer + 1;
    const std::array<int, 3> top{level(tri[0], top_level), level(tri[1], top_level), level(tri[2], top_level)};
    if (p.layer == W - 1) {
      const auto face = require(find_face(m, p.first_tet, 3, top));
      (ilt_tri[p.triangle] ? m.interface : m.luminal).push_back(face);
    }
    if (p.layer == W + I - 1) m.luminal.push_back(require(find_face(m, p.first_tet, 3, top)));
    if (p.layer >= W) {
      for (int e = 0; e < 3; ++e) {
        const int a = tri[e], b = tri[(e + 1) % 3];
        const auto& nb = edge_tris.at(edge_key(a, b));
        bool exposed = false;
        for (int g : nb) exposed |= g != p.triangle && !ilt_tri[g];
        if (!exposed) continue;
        const std::array<int, 4> quad{level(a, p.layer), level(b, p.layer), level(a, p.layer + 1),
                                      level(b, p.layer + 1)};
        int found = 0;
        for (int skip = 0; skip < 4; ++skip) {
          std::array<int, 3> c{};
          for (int k = 0, n = 0; k < 4; ++k)
            if (k != skip) c[n++] = quad[k];
          if (auto face = find_face(m, p.first_tet, 3, c)) {
            m.luminal.push_back(*face);
            ++found;
          }
        }
        if (found != 2) throw Error("build_layered_mesh: ILT side face split inconsistently");
      }
    }
  }
  std::sort(m.luminal.begin(), m.luminal.end());
  std::sort(m.interface.begin(), m.interface.end());

  // Wall columns: corner levels 0..W and the mid nodes between them.
  m.column_vertex.assign(m.nodes.size(), -1);
  m.column_position.assign(m.nodes.size(), 0.0);
  for (int v = 0; v < nv; ++v)
    for (int L = 0; L <= W; ++L) {
      m.column_vertex[level(v, L)] = v;
      m.column_position[level(v, L)] = t * L / W;
      if (L == W) continue;
      const auto it = mid.find(edge_key(level(v, L), level(v, L + 1)));
      if (it == mid.end()) continue;
      m.column_vertex[it->second] = v;
      m.column_position[it->second] = t * (L + 0.5) / W;
    }

  if (diagnostics) *diagnostics = std::move(diag);
  quality_check(m);
  return m;
}

}  // namespace aaa::meshing
