#include "aaa/volume.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace aaa::volume {
namespace {

struct Offset {
  int di, dj, dk;
};

std::vector<Offset> neighbour_offsets(Connectivity connectivity) {
  std::vector<Offset> out;
  const int limit = static_cast<int>(connectivity) == 6 ? 1 : static_cast<int>(connectivity) == 18 ? 2 : 3;
  for (int dk = -1; dk <= 1; ++dk)
    for (int dj = -1; dj <= 1; ++dj)
      for (int di = -1; di <= 1; ++di) {
        const int n = std::abs(di) + std::abs(dj) + std::abs(dk);
        if (n > 0 && n <= limit) out.push_back({di, dj, dk});
      }
  return out;
}

/// Component id per voxel (-1 for background) and the size of each
/// component. Components are numbered in order of their first voxel.
struct Components {
  std::vector<int> label;
  std::vector<std::size_t> sizes;
};

Components label_components(const Grid& g, const std::vector<std::uint8_t>& fg,
                            std::uint8_t value, Connectivity connectivity) {
  const auto offsets = neighbour_offsets(connectivity);
  Components c;
  c.label.assign(g.voxel_count(), -1);
  std::vector<std::size_t> stack;
  const int nx = g.dims[0], ny = g.dims[1];
  for (std::size_t seed = 0; seed < fg.size(); ++seed) {
    if (fg[seed] != value || c.label[seed] >= 0) continue;
    const int id = static_cast<int>(c.sizes.size());
    std::size_t size = 0;
    c.label[seed] = id;
    stack.push_back(seed);
    while (!stack.empty()) {
      const std::size_t v = stack.back();
      stack.pop_back();
      ++size;
      const int i = static_cast<int>(v % nx);
      const int j = static_cast<int>((v / nx) % ny);
      const int k = static_cast<int>(v / (static_cast<std::size_t>(nx) * ny));
      for (const auto& o : offsets) {
        const int a = i + o.di, b = j + o.dj, d = k + o.dk;
        if (!g.contains(a, b, d)) continue;
        const std::size_t w = g.index(a, b, d);
        if (fg[w] == value && c.label[w] < 0) {
          c.label[w] = id;
          stack.push_back(w);
        }
      }
    }
    c.sizes.push_back(size);
  }
  return c;
}

/// out[n] = sum of in[clamp(n + d)] for d in [-r, r], along one axis.
void box_sum_axis(const Grid& g, const std::vector<int>& in, std::vector<int>& out, int axis, int r) {
  const int n = g.dims[axis];
  const std::size_t stride = axis == 0 ? 1 : axis == 1 ? static_cast<std::size_t>(g.dims[0])
                                                       : static_cast<std::size_t>(g.dims[0]) * g.dims[1];
  const int a1 = axis == 0 ? 1 : 0, a2 = axis == 2 ? 1 : 2;
  std::vector<int> line(n);
  for (int q = 0; q < g.dims[a2]; ++q)
    for (int p = 0; p < g.dims[a1]; ++p) {
      std::array<int, 3> idx{0, 0, 0};
      idx[a1] = p;
      idx[a2] = q;
      const std::size_t base = g.index(idx[0], idx[1], idx[2]);
      for (int m = 0; m < n; ++m) line[m] = in[base + m * stride];
      auto at = [&](int m) { return line[std::clamp(m, 0, n - 1)]; };
      int sum = 0;
      for (int d = -r; d <= r; ++d) sum += at(d);
      for (int m = 0; m < n; ++m) {
        out[base + m * stride] = sum;
        sum += at(m + r + 1) - at(m - r);
      }
    }
}

/// 1D squared Euclidean distance transform (Felzenszwalb & Huttenlocher)
/// with sample spacing h.
void edt_1d(const double* f, double* d, int n, double h, std::vector<int>& v, std::vector<double>& z) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  v.resize(n);
  z.resize(n + 1);
  // Abscissa where the parabolas rooted at samples p and q intersect.
  auto meet = [&](int p, int q) {
    const double xp = p * h, xq = q * h;
    return ((f[q] + xq * xq) - (f[p] + xp * xp)) / (2.0 * (xq - xp));
  };
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == inf) continue;
    double s = -inf;
    while (k >= 0) {
      s = meet(v[k], q);
      if (s > z[k]) break;
      --k;
    }
    if (k < 0) s = -inf;
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = inf;
  }
  if (k < 0) {
    std::fill(d, d + n, inf);
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q * h) ++j;
    const double dx = (q - v[j]) * h;
    d[q] = dx * dx + f[v[j]];
  }
}

/// Squared physical distance from each voxel centre to the nearest voxel
/// whose value equals `target` (infinity if none).
std::vector<double> squared_distance_to(const BinaryMask& mask, std::uint8_t target) {
  const Grid& g = mask.grid();
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(g.voxel_count());
  for (std::size_t n = 0; n < dist.size(); ++n) dist[n] = mask.values()[n] == target ? 0.0 : inf;
  std::vector<double> f, d;
  std::vector<int> v;
  std::vector<double> z;
  for (int axis = 0; axis < 3; ++axis) {
    const int n = g.dims[axis];
    const std::size_t stride = axis == 0 ? 1 : axis == 1 ? static_cast<std::size_t>(g.dims[0])
                                                         : static_cast<std::size_t>(g.dims[0]) * g.dims[1];
    const int a1 = axis == 0 ? 1 : 0, a2 = axis == 2 ? 1 : 2;
    f.resize(n);
    d.resize(n);
    for (int q = 0; q < g.dims[a2]; ++q)
      for (int p = 0; p < g.dims[a1]; ++p) {
        std::array<int, 3> idx{0, 0, 0};
        idx[a1] = p;
        idx[a2] = q;
        const std::size_t base = g.index(idx[0], idx[1], idx[2]);
        for (int m = 0; m < n; ++m) f[m] = dist[base + m * stride];
        edt_1d(f.data(), d.data(), n, g.spacing[axis], v, z);
        for (int m = 0; m < n; ++m) dist[base + m * stride] = d[m];
      }
  }
  return dist;
}

}  // namespace

BinaryMask largest_component(const BinaryMask& mask, Connectivity connectivity) {
  const auto c = label_components(mask.grid(), mask.values(), 1, connectivity);
  if (c.sizes.empty()) throw Error("largest_component: mask is empty");
  int best = 0;
  for (int id = 1; id < static_cast<int>(c.sizes.size()); ++id)
    if (c.sizes[id] > c.sizes[best]) best = id;
  std::vector<std::uint8_t> values(c.label.size());
  for (std::size_t n = 0; n < values.size(); ++n) values[n] = c.label[n] == best ? 1 : 0;
  return BinaryMask(mask.grid(), std::move(values));
}

BinaryMask convolution_smooth(const BinaryMask& mask, double kernel_radius_mm, double threshold) {
  const Grid& g = mask.grid();
  if (!g.is_isotropic()) throw Error("convolution_smooth: mask must be isotropic");
  if (!(threshold > 0.0 && threshold < 1.0)) throw Error("convolution_smooth: threshold must lie in (0,1)");
  const double rv = kernel_radius_mm / g.spacing.x();
  if (rv < 1.0) {
    warn("convolution_smooth: kernel radius " + std::to_string(kernel_radius_mm) +
         " mm is below one voxel; mask left unchanged");
    return mask;
  }
  const int r = static_cast<int>(std::floor(rv + 0.5));
  std::vector<int> a(mask.values().begin(), mask.values().end()), b(a.size());
  box_sum_axis(g, a, b, 0, r);
  box_sum_axis(g, b, a, 1, r);
  box_sum_axis(g, a, b, 2, r);
  const double window = std::pow(2.0 * r + 1.0, 3);
  std::vector<std::uint8_t> values(b.size());
  for (std::size_t n = 0; n < b.size(); ++n) values[n] = b[n] / window > threshold ? 1 : 0;
  return BinaryMask(g, std::move(values));
}

BinaryMask fill_holes(const BinaryMask& mask) {
  const Grid& g = mask.grid();
  const auto offsets = neighbour_offsets(Connectivity::Six);
  std::vector<std::uint8_t> outside(g.voxel_count(), 0);
  std::vector<std::size_t> stack;
  auto seed = [&](int i, int j, int k) {
    const std::size_t v = g.index(i, j, k);
    if (!mask.values()[v] && !outside[v]) {
      outside[v] = 1;
      stack.push_back(v);
    }
  };
  const auto [nx, ny, nz] = g.dims;
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i)
        if (i == 0 || j == 0 || k == 0 || i == nx - 1 || j == ny - 1 || k == nz - 1) seed(i, j, k);
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    const int i = static_cast<int>(v % nx);
    const int j = static_cast<int>((v / nx) % ny);
    const int k = static_cast<int>(v / (static_cast<std::size_t>(nx) * ny));
    for (const auto& o : offsets)
      if (g.contains(i + o.di, j + o.dj, k + o.dk)) seed(i + o.di, j + o.dj, k + o.dk);
  }
  std::vector<std::uint8_t> values(outside.size());
  for (std::size_t n = 0; n < values.size(); ++n) values[n] = outside[n] ? 0 : 1;
  return BinaryMask(g, std::move(values));
}

BinaryMask dilate(const BinaryMask& mask, double radius_mm) {
  if (radius_mm <= 0.0) return mask;
  const auto d2 = squared_distance_to(mask, 1);
  const double r2 = radius_mm * radius_mm * (1.0 + 1e-12);
  std::vector<std::uint8_t> values(d2.size());
  for (std::size_t n = 0; n < d2.size(); ++n) values[n] = d2[n] <= r2 ? 1 : 0;
  return BinaryMask(mask.grid(), std::move(values));
}

BinaryMask erode(const BinaryMask& mask, double radius_mm) {
  if (radius_mm <= 0.0) return mask;
  const auto d2 = squared_distance_to(mask, 0);
  const double r2 = radius_mm * radius_mm * (1.0 + 1e-12);
  std::vector<std::uint8_t> values(d2.size());
  for (std::size_t n = 0; n < d2.size(); ++n) values[n] = d2[n] <= r2 ? 0 : 1;
  return BinaryMask(mask.grid(), std::move(values));
}

BinaryMask remove_extrusions(const BinaryMask& mask, double opening_radius_mm) {
  if (!mask.grid().is_isotropic()) throw Error("remove_extrusions: mask must be isotropic");
  if (opening_radius_mm < 0.0) throw Error("remove_extrusions: radius must be non-negative");
  if (opening_radius_mm == 0.0) return mask;
  return dilate(erode(mask, opening_radius_mm), opening_radius_mm);
}

BinaryMask gaussian_smooth_binary(const BinaryMask& mask, double sigma_mm) {
  const Grid& g = mask.grid();
  if (!g.is_isotropic()) throw Error("gaussian_smooth_binary: mask must be isotropic");
  if (sigma_mm < 0.0) throw Error("gaussian_smooth_binary: sigma must be non-negative");
  if (sigma_mm == 0.0) return mask;
  const double sv = sigma_mm / g.spacing.x();
  const int r = std::max(1, static_cast<int>(std::ceil(3.0 * sv)));
  std::vector<double> kernel(2 * r + 1);
  double total = 0.0;
  for (int d = -r; d <= r; ++d) total += kernel[d + r] = std::exp(-0.5 * d * d / (sv * sv));
  for (auto& w : kernel) w /= total;

  std::vector<double> a(mask.values().begin(), mask.values().end()), b(a.size());
  for (int axis = 0; axis < 3; ++axis) {
    const int n = g.dims[axis];
    const std::size_t stride = axis == 0 ? 1 : axis == 1 ? static_cast<std::size_t>(g.dims[0])
                                                         : static_cast<std::size_t>(g.dims[0]) * g.dims[1];
    const int a1 = axis == 0 ? 1 : 0, a2 = axis == 2 ? 1 : 2;
    for (int q = 0; q < g.dims[a2]; ++q)
      for (int p = 0; p < g.dims[a1]; ++p) {
        std::array<int, 3> idx{0, 0, 0};
        idx[a1] = p;
        idx[a2] = q;
        const std::size_t base = g.index(idx[0], idx[1], idx[2]);
        for (int m = 0; m < n; ++m) {
          double s = 0.0;
          for (int d = -r; d <= r; ++d) s += kernel[d + r] * a[base + std::clamp(m + d, 0, n - 1) * stride];
          b[base + m * stride] = s;
        }
      }
    std::swap(a, b);
  }
  std::vector<std::uint8_t> values(a.size());
  for (std::size_t n = 0; n < a.size(); ++n) values[n] = a[n] > 0.5 ? 1 : 0;
  return BinaryMask(g, std::move(values));
}

}  // namespace aaa::volume
