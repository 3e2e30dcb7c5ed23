#include "aaa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace aaa::metrics {

using meshing::Region;
using meshing::TetMesh;

double relative_difference(double v_auto, double v_semi) {
  if (v_semi == 0.0) throw Error("relative_difference: reference value is zero");
  return (v_auto - v_semi) / v_semi * 100.0;
}

std::vector<double> region_values(const solver::StressField& field, const TetMesh& mesh, Region region) {
  if (field.max_principal.size() != mesh.nodes.size()) throw Error("stress statistics: field does not match the mesh");
  std::vector<char> in(mesh.nodes.size(), 0);
  for (std::size_t e = 0; e < mesh.elements.size(); ++e)
    if (mesh.regions[e] == region)
      for (int n : mesh.elements[e]) in[n] = 1;
  std::vector<double> v;
  for (std::size_t n = 0; n < in.size(); ++n)
    if (in[n]) v.push_back(field.max_principal[n]);
  if (v.empty()) throw Error(std::string("stress statistics: no nodes in region ") + meshing::region_name(region));
  return v;
}

namespace {

std::vector<double> sorted(const std::vector<double>& values) {
  if (values.empty()) throw Error("stress statistics: empty value set");
  std::vector<double> s = values;
  for (double v : s)
    if (!std::isfinite(v)) throw Error("stress statistics: non-finite value");
  std::sort(s.begin(), s.end());
  return s;
}

/// ceil(p*n/100), ignoring round-off just above an integer.
std::size_t nearest_rank(double p, std::size_t n) {
  const double x = p * static_cast<double>(n) / 100.0;
  const double r = std::round(x);
  const double k = std::abs(x - r) <= 1e-9 * std::max(1.0, x) ? r : std::ceil(x);
  return std::clamp<std::size_t>(static_cast<std::size_t>(k), 1, n);
}

}  // namespace

double peak(const std::vector<double>& values) { return sorted(values).back(); }

double percentile(const std::vector<double>& values, double p) {
  if (!(p > 0.0 && p <= 100.0)) throw Error("percentile: p must be in (0, 100]");
  const auto s = sorted(values);
  return s[nearest_rank(p, s.size()) - 1];
}

std::vector<double> percentiles(const std::vector<double>& values, const std::vector<double>& ps) {
  const auto s = sorted(values);
  std::vector<double> out;
  out.reserve(ps.size());
  for (double p : ps) {
    if (!(p > 0.0 && p <= 100.0)) throw Error("percentile: p must be in (0, 100]");
    out.push_back(s[nearest_rank(p, s.size()) - 1]);
  }
  return out;
}

PercentileCurve percentile_curve(const std::vector<double>& values, std::size_t max_points) {
  const auto s = sorted(values);
  const std::size_t n = s.size();
  const std::size_t m = std::min(n, std::max<std::size_t>(max_points, 1));
  PercentileCurve curve;
  curve.reserve(m);
  for (std::size_t j = 1; j <= m; ++j) {
    // k = ceil(j*n/m) in integers.
    const std::size_t k = (j * n + m - 1) / m;
    curve.emplace_back(100.0 * static_cast<double>(k) / static_cast<double>(n), s[k - 1]);
  }
  return curve;
}

double peak_stress(const solver::StressField& field, const TetMesh& mesh, Region region) {
  return peak(region_values(field, mesh, region));
}

double percentile_stress(const solver::StressField& field, const TetMesh& mesh, double p, Region region) {
  return percentile(region_values(field, mesh, region), p);
}

StressStats stress_stats(const solver::StressField& field, const TetMesh& mesh, Region region) {
  const auto v = region_values(field, mesh, region);
  StressStats st;
  st.peak = peak(v);
  st.p99 = percentile(v, 99.0);
  st.curve = percentile_curve(v);
  return st;
}

// ---------------------------------------------------------------------------

namespace {

class PointGrid {
 public:
  explicit PointGrid(const std::vector<Vec3>& pts) : pts_(pts) {
    lo_ = hi_ = pts[0];
    for (const auto& p : pts) {
      lo_ = lo_.cwiseMin(p);
      hi_ = hi_.cwiseMax(p);
    }
    const Vec3 ext = hi_ - lo_;
    double vol = 1.0;
    int dims = 0;
    for (int a = 0; a < 3; ++a)
      if (ext[a] > 0.0) {
        vol *= ext[a];
        ++dims;
      }
    // About two points per cell.
    h_ = dims == 0 ? 1.0 : std::pow(2.0 * vol / static_cast<double>(pts.size()), 1.0 / dims);
    if (!(h_ > 0.0) || !std::isfinite(h_)) h_ = 1.0;
    for (int a = 0; a < 3; ++a) n_[a] = std::clamp(static_cast<long>(ext[a] / h_) + 1, 1L, 4096L);
    for (int a = 0; a < 3; ++a) h_ = std::max(h_, ext[a] / static_cast<double>(n_[a]) * (1.0 + 1e-12));

    start_.assign(static_cast<std::size_t>(n_[0] * n_[1] * n_[2]) + 1, 0);
    std::vector<long> cell(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto c = cell_of(pts[i]);
      cell[i] = flat(std::clamp(c[0], 0L, n_[0] - 1), std::clamp(c[1], 0L, n_[1] - 1), std::clamp(c[2], 0L, n_[2] - 1));
      ++start_[cell[i] + 1];
    }
    for (std::size_t c = 1; c < start_.size(); ++c) start_[c] += start_[c - 1];
    items_.resize(pts.size());
    auto fill = start_;
    for (std::size_t i = 0; i < pts.size(); ++i) items_[fill[cell[i]]++] = static_cast<int>(i);
  }

  /// Nearest distance from x, or any value <= `enough` once one is found.
  double nearest(const Vec3& x, double enough) const {
    const auto c = cell_of(x);
    long r0 = 0;
    for (int a = 0; a < 3; ++a) r0 = std::max({r0, -c[a], c[a] - (n_[a] - 1)});
    const long r_max = r0 + std::max({n_[0], n_[1], n_[2]});
    double best = std::numeric_limits<double>::infinity();
    for (long r = r0; r <= r_max; ++r) {
      for (long k = std::max(0L, c[2] - r); k <= std::min(n_[2] - 1, c[2] + r); ++k)
        for (long j = std::max(0L, c[1] - r); j <= std::min(n_[1] - 1, c[1] + r); ++j)
          for (long i = std::max(0L, c[0] - r); i <= std::min(n_[0] - 1, c[0] + r); ++i) {
            if (std::max({std::abs(i - c[0]), std::abs(j - c[1]), std::abs(k - c[2])}) != r) continue;
            const long f = flat(i, j, k);
            for (long t = start_[f]; t < start_[f + 1]; ++t) best = std::min(best, (x - pts_[items_[t]]).norm());
          }
      // Cells beyond ring r are at least r*h away.
      if (best <= static_cast<double>(r) * h_ || best <= enough) break;
    }
    return best;
  }

 private:
  std::array<long, 3> cell_of(const Vec3& x) const {
    std::array<long, 3> c{};
    for (int a = 0; a < 3; ++a) {
      const double t = std::floor((x[a] - lo_[a]) / h_);
      c[a] = static_cast<long>(std::clamp(t, -1e12, 1e12));
    }
    return c;
  }
  long flat(long i, long j, long k) const { return (k * n_[1] + j) * n_[0] + i; }

  const std::vector<Vec3>& pts_;
  Vec3 lo_, hi_;
  double h_ = 1.0;
  std::array<long, 3> n_{1, 1, 1};
  std::vector<long> start_;
  std::vector<int> items_;
};

}  // namespace

double directed_hausdorff(const std::vector<Vec3>& x, const std::vector<Vec3>& y) {
  if (x.empty() || y.empty()) throw Error("hausdorff: empty point set");
  const PointGrid grid(y);
  double h = 0.0;
  for (const auto& p : x) h = std::max(h, grid.nearest(p, h));
  return h;
}

double hausdorff(const std::vector<Vec3>& x, const std::vector<Vec3>& y) {
  return std::max(directed_hausdorff(x, y), directed_hausdorff(y, x));
}

std::vector<Vec3> slice_boundary(const volume::BinaryMask& mask, int k) {
  const auto& g = mask.grid();
  if (k < 0 || k >= g.dims[2]) throw Error("slice_boundary: slice out of range");
  auto fg = [&](int i, int j) { return g.contains(i, j, k) && mask.at(i, j, k); };
  std::vector<Vec3> pts;
  for (int j = 0; j < g.dims[1]; ++j)
    for (int i = 0; i < g.dims[0]; ++i)
      if (fg(i, j) && (!fg(i - 1, j) || !fg(i + 1, j) || !fg(i, j - 1) || !fg(i, j + 1))) pts.push_back(g.center(i, j, k));
  return pts;
}

SliceHdProfile slice_hd_profile(const volume::BinaryMask& a, const volume::BinaryMask& b) {
  if (!a.grid().same_geometry(b.grid())) throw Error("slice_hd_profile: masks are on different grids");
  const auto& g = a.grid();
  const int nz = g.dims[2];
  std::vector<double> hd(nz, -1.0);
  parallel_for(static_cast<std::size_t>(nz), 1, [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const auto pa = slice_boundary(a, static_cast<int>(k));
      const auto pb = slice_boundary(b, static_cast<int>(k));
      if (!pa.empty() && !pb.empty()) hd[k] = hausdorff(pa, pb);
    }
  });

  SliceHdProfile prof;
  std::vector<double> values;
  for (int k = 0; k < nz; ++k)
    if (hd[k] >= 0.0) {
      prof.slices.push_back({k, g.center(0, 0, k).z(), hd[k]});
      values.push_back(hd[k]);
    }
  if (values.empty()) throw Error("slice_hd_profile: no slice has foreground in both masks");
  double sum = 0.0;
  for (double v : values) sum += v;
  prof.mean = sum / static_cast<double>(values.size());
  prof.curve = percentile_curve(values);
  return prof;
}

// ---------------------------------------------------------------------------

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw Error("error writing " + path.string());
}

}  // namespace

void write_stats_csv(const std::vector<StatsRow>& rows, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "case,peak_mpa,p99_mpa\n";
  for (const auto& r : rows) out << r.name << ',' << fmt(r.peak) << ',' << fmt(r.p99) << '\n';
  finish(out, path);
}

void write_percentile_curve_csv(const PercentileCurve& curve, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "percentile,max_principal_mpa\n";
  for (const auto& [p, v] : curve) out << fmt(p) << ',' << fmt(v) << '\n';
  finish(out, path);
}

void write_hd_profile_csv(const SliceHdProfile& profile, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "slice,z_mm,hd_mm\n";
  for (const auto& s : profile.slices) out << s.slice << ',' << fmt(s.z) << ',' << fmt(s.hd) << '\n';
  finish(out, path);
}

}  // namespace aaa::metrics
