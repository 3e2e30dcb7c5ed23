#include "aaa/solver.hpp"

#include "solver_detail.hpp"

#include <algorithm>
#include <cmath>

namespace aaa::solver {

using meshing::Region;
using meshing::TetMesh;

void MaterialSpec::validate() const {
  if (!(wall_modulus > 0.0) || !std::isfinite(wall_modulus)) throw Error("material: wall_modulus must be positive");
  if (!(compliance_ratio > 0.0) || !std::isfinite(compliance_ratio))
    throw Error("material: compliance_ratio must be positive");
  if (!(poisson >= 0.0 && poisson < 0.5)) throw Error("material: poisson must lie in [0, 0.5)");
}

double MaterialSpec::modulus_mpa(Region r) const {
  const double e = wall_modulus * 1e-6;
  return r == Region::Wall ? e : e / compliance_ratio;
}

Eigen::Matrix<double, 6, 6> hooke_matrix(double modulus, double poisson) {
  const double lambda = modulus * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
  const double mu = modulus / (2.0 * (1.0 + poisson));
  Eigen::Matrix<double, 6, 6> d = Eigen::Matrix<double, 6, 6>::Zero();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) d(i, j) = lambda;
    d(i, i) = lambda + 2.0 * mu;
    d(3 + i, 3 + i) = mu;
  }
  return d;
}

namespace detail {

const std::array<std::array<double, 4>, 4>& gauss_points() {
  static const std::array<std::array<double, 4>, 4> pts = [] {
    std::array<std::array<double, 4>, 4> p{};
    for (int g = 0; g < 4; ++g)
      for (int k = 0; k < 4; ++k) p[g][k] = g == k ? kGaussA : kGaussB;
    return p;
  }();
  return pts;
}

Eigen::Matrix<double, 10, 3> shape_gradients(const std::array<Vec3, 10>& x, const std::array<double, 4>& l,
                                             double* det_j) {
  // Derivatives of the barycentric coordinates with respect to (xi, eta,
  // zeta), where L1 = xi, L2 = eta, L3 = zeta and L0 = 1 - xi - eta - zeta.
  static const double dl[4][3] = {{-1, -1, -1}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  Eigen::Matrix<double, 10, 3> dn;
  for (int i = 0; i < 4; ++i)
    for (int r = 0; r < 3; ++r) dn(i, r) = (4.0 * l[i] - 1.0) * dl[i][r];
  for (int k = 0; k < 6; ++k) {
    const int a = kEdges[k][0], b = kEdges[k][1];
    for (int r = 0; r < 3; ++r) dn(4 + k, r) = 4.0 * (l[b] * dl[a][r] + l[a] * dl[b][r]);
  }
  Eigen::Matrix3d j = Eigen::Matrix3d::Zero();
  for (int i = 0; i < 10; ++i) j += dn.row(i).transpose() * x[i].transpose();
  const double det = j.determinant();
  if (det_j) *det_j = det;
  if (!(det > 0.0)) throw Error("solver: element with non-positive Jacobian");
  return dn * j.inverse().transpose();
}

Eigen::Matrix<double, 6, 30> strain_matrix(const Eigen::Matrix<double, 10, 3>& g) {
  Eigen::Matrix<double, 6, 30> b = Eigen::Matrix<double, 6, 30>::Zero();
  for (int i = 0; i < 10; ++i) {
    const double gx = g(i, 0), gy = g(i, 1), gz = g(i, 2);
    b(0, 3 * i) = gx;
    b(1, 3 * i + 1) = gy;
    b(2, 3 * i + 2) = gz;
    b(3, 3 * i) = gy;
    b(3, 3 * i + 1) = gx;
    b(4, 3 * i + 1) = gz;
    b(4, 3 * i + 2) = gy;
    b(5, 3 * i) = gz;
    b(5, 3 * i + 2) = gx;
  }
  return b;
}

std::array<Vec3, 10> element_nodes(const TetMesh& m, int e) {
  std::array<Vec3, 10> x;
  for (int k = 0; k < 10; ++k) x[k] = m.nodes[m.elements[e][k]];
  return x;
}

}  // namespace detail

Eigen::Matrix<double, 30, 30> element_stiffness(const std::array<Vec3, 10>& x, double modulus, double poisson) {
  const auto d = hooke_matrix(modulus, poisson);
  Eigen::Matrix<double, 30, 30> k = Eigen::Matrix<double, 30, 30>::Zero();
  for (const auto& l : detail::gauss_points()) {
    double det = 0.0;
    const auto b = detail::strain_matrix(detail::shape_gradients(x, l, &det));
    k.noalias() += (detail::kGaussWeight * det) * (b.transpose() * d * b);
  }
  return k;
}

Assembly assemble(const TetMesh& mesh, const MaterialSpec& mat) {
  mat.validate();
  meshing::validate(mesh);
  const int nn = static_cast<int>(mesh.nodes.size());
  const int ne = static_cast<int>(mesh.elements.size());

  // Node -> element incidence, then node adjacency with a marker array.
  std::vector<int> first(nn + 1, 0), incident(10 * static_cast<std::size_t>(ne));
  for (const auto& el : mesh.elements)
    for (int n : el) ++first[n + 1];
  for (int n = 0; n < nn; ++n) first[n + 1] += first[n];
  {
    auto fill = first;
    for (int e = 0; e < ne; ++e)
      for (int n : mesh.elements[e]) incident[fill[n]++] = e;
  }
  std::vector<int> marker(nn, -1);
  std::vector<std::vector<int>> upper(nn);  // neighbours m >= n
  for (int n = 0; n < nn; ++n) {
    auto& nb = upper[n];
    for (int k = first[n]; k < first[n + 1]; ++k)
      for (int m : mesh.elements[incident[k]])
        if (m >= n && marker[m] != n) {
          marker[m] = n;
          nb.push_back(m);
        }
    std::sort(nb.begin(), nb.end());
  }

  // Lower-triangle CSC over DOFs: column 3n+c holds rows 3m+d >= 3n+c.
  const int ndof = 3 * nn;
  std::vector<int> outer(ndof + 1, 0);
  for (int n = 0; n < nn; ++n)
    for (int c = 0; c < 3; ++c) outer[3 * n + c + 1] = 3 * static_cast<int>(upper[n].size()) - c;
  for (int j = 0; j < ndof; ++j) outer[j + 1] += outer[j];
  std::vector<int> inner(outer[ndof]);
  for (int n = 0; n < nn; ++n)
    for (int c = 0; c < 3; ++c) {
      int pos = outer[3 * n + c];
      for (int m : upper[n])
        for (int d = (m == n ? c : 0); d < 3; ++d) inner[pos++] = 3 * m + d;
    }
  upper.clear();
  upper.shrink_to_fit();

  std::vector<double> values(inner.size(), 0.0);
  const double e_wall = 1.0, e_ilt = 1.0 / mat.compliance_ratio;
  constexpr std::size_t kChunk = 1024;
  std::vector<Eigen::Matrix<double, 30, 30>> ke(kChunk);
  for (std::size_t start = 0; start < static_cast<std::size_t>(ne); start += kChunk) {
    const std::size_t count = std::min(kChunk, static_cast<std::size_t>(ne) - start);
    parallel_for(count, 64, [&](std::size_t b, std::size_t e) {
      for (std::size_t k = b; k < e; ++k) {
        const int el = static_cast<int>(start + k);
        const double modulus = mesh.regions[el] == Region::Wall ? e_wall : e_ilt;
        ke[k] = element_stiffness(detail::element_nodes(mesh, el), modulus, mat.poisson);
      }
    });
    for (std::size_t k = 0; k < count; ++k) {
      const auto& el = mesh.elements[start + k];
      for (int a = 0; a < 10; ++a)
        for (int c = 0; c < 3; ++c) {
          const int col = 3 * el[a] + c;
          const int* begin = inner.data() + outer[col];
          const int* end = inner.data() + outer[col + 1];
          for (int b = 0; b < 10; ++b)
            for (int d = 0; d < 3; ++d) {
              const int row = 3 * el[b] + d;
              if (row < col) continue;
              const int* it = std::lower_bound(begin, end, row);
              values[it - inner.data()] += ke[k](3 * b + d, 3 * a + c);
            }
        }
    }
  }
  for (double v : values)
    if (!std::isfinite(v)) throw Error("assemble: non-finite stiffness entry");

  Assembly out;
  out.scale = mat.modulus_mpa(Region::Wall);
  out.system.full_size = ndof;
  out.system.lower = Eigen::Map<const Eigen::SparseMatrix<double>>(ndof, ndof, static_cast<Eigen::Index>(values.size()),
                                                                    outer.data(), inner.data(), values.data());
  return out;
}

LinearSystem apply_constraints(const LinearSystem& system, const std::vector<int>& top,
                               const std::vector<int>& bottom) {
  if (top.empty() && bottom.empty()) throw Error("apply_constraints: no constrained nodes; the model is free-floating");
  if (!system.dof_map.empty()) throw Error("apply_constraints: system is already constrained");
  const int ndof = system.full_size;
  std::vector<char> fixed(ndof, 0);
  for (const auto* set : {&top, &bottom})
    for (int n : *set) {
      if (n < 0 || 3 * n + 2 >= ndof) throw Error("apply_constraints: node " + std::to_string(n) + " out of range");
      for (int c = 0; c < 3; ++c) fixed[3 * n + c] = 1;
    }
  LinearSystem out;
  out.full_size = ndof;
  out.dof_map.assign(ndof, -1);
  int free = 0;
  for (int i = 0; i < ndof; ++i)
    if (!fixed[i]) out.dof_map[i] = free++;

  const auto& k = system.lower;
  std::vector<int> outer(free + 1, 0), inner;
  std::vector<double> values;
  inner.reserve(k.nonZeros());
  values.reserve(k.nonZeros());
  for (int j = 0; j < ndof; ++j) {
    if (fixed[j]) continue;
    for (Eigen::SparseMatrix<double>::InnerIterator it(k, j); it; ++it) {
      const int r = out.dof_map[it.row()];
      if (r < 0) continue;
      inner.push_back(r);
      values.push_back(it.value());
    }
    outer[out.dof_map[j] + 1] = static_cast<int>(inner.size());
  }
  out.lower = Eigen::Map<const Eigen::SparseMatrix<double>>(free, free, static_cast<Eigen::Index>(values.size()),
                                                            outer.data(), inner.data(), values.data());
  return out;
}

Eigen::VectorXd apply_pressure(const TetMesh& mesh, const std::vector<meshing::FaceRef>& faces, double pressure_kpa) {
  const double p = pressure_kpa * 1e-3;  // MPa = N/mm^2
  Eigen::VectorXd f = Eigen::VectorXd::Zero(3 * static_cast<Eigen::Index>(mesh.nodes.size()));
  // Three-point rule, exact for the quadratic integrands of flat faces.
  static const double pts[3][2] = {{1.0 / 6, 1.0 / 6}, {2.0 / 3, 1.0 / 6}, {1.0 / 6, 2.0 / 3}};
  for (const auto& face : faces) {
    if (face.element < 0 || face.element >= static_cast<int>(mesh.elements.size()) || face.face < 0 || face.face > 3)
      throw Error("apply_pressure: invalid face reference");
    const auto n = meshing::face_nodes(mesh.elements[face.element], face.face);
    std::array<Vec3, 6> x;
    for (int k = 0; k < 6; ++k) x[k] = mesh.nodes[n[k]];
    const double scale = std::max((x[1] - x[0]).squaredNorm(), (x[2] - x[0]).squaredNorm());
    if (!((x[1] - x[0]).cross(x[2] - x[0]).norm() > 1e-14 * scale))
      throw Error("apply_pressure: zero-area face on element " + std::to_string(face.element));
    for (const auto& q : pts) {
      const double s = q[0], t = q[1], l0 = 1.0 - s - t;
      const std::array<double, 6> shape{l0 * (2 * l0 - 1), s * (2 * s - 1), t * (2 * t - 1),
                                        4 * l0 * s,        4 * s * t,       4 * t * l0};
      const std::array<double, 6> ds{1 - 4 * l0, 4 * s - 1, 0.0, 4 * (l0 - s), 4 * t, -4 * t};
      const std::array<double, 6> dt{1 - 4 * l0, 0.0, 4 * t - 1, -4 * s, 4 * s, 4 * (l0 - t)};
      Vec3 xs = Vec3::Zero(), xt = Vec3::Zero();
      for (int k = 0; k < 6; ++k) {
        xs += ds[k] * x[k];
        xt += dt[k] * x[k];
      }
      const Vec3 traction = -p * xs.cross(xt) / 6.0;
      for (int k = 0; k < 6; ++k) f.segment<3>(3 * n[k]) += shape[k] * traction;
    }
  }
  return f;
}

Eigen::VectorXd internal_forces(const TetMesh& mesh, const MaterialSpec& mat, const Eigen::VectorXd& u) {
  if (u.size() != 3 * static_cast<Eigen::Index>(mesh.nodes.size()))
    throw Error("internal_forces: displacement size does not match the mesh");
  Eigen::VectorXd f = Eigen::VectorXd::Zero(u.size());
  for (int e = 0; e < static_cast<int>(mesh.elements.size()); ++e) {
    const auto& el = mesh.elements[e];
    const auto k = element_stiffness(detail::element_nodes(mesh, e), mat.modulus_mpa(mesh.regions[e]), mat.poisson);
    Eigen::Matrix<double, 30, 1> ue;
    for (int a = 0; a < 10; ++a) ue.segment<3>(3 * a) = u.segment<3>(3 * el[a]);
    const Eigen::Matrix<double, 30, 1> fe = k * ue;
    for (int a = 0; a < 10; ++a) f.segment<3>(3 * el[a]) += fe.segment<3>(3 * a);
  }
  return f;
}

}  // namespace aaa::solver
