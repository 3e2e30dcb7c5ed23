#include "aaa/solver.hpp"

#include "solver_detail.hpp"

#include <Eigen/LU>

namespace aaa::solver {

using meshing::Region;
using meshing::TetMesh;

namespace {

/// Linear tetrahedron stiffness, 12x12, node-major.
Eigen::Matrix<double, 12, 12> linear_stiffness(const std::array<Vec3, 4>& x, double modulus, double poisson) {
  Eigen::Matrix4d a;
  for (int i = 0; i < 4; ++i) {
    a(i, 0) = 1.0;
    a.block<1, 3>(i, 1) = x[i].transpose();
  }
  const double volume = std::abs(a.determinant()) / 6.0;
  const Eigen::Matrix4d inv = a.inverse();
  Eigen::Matrix<double, 6, 12> b = Eigen::Matrix<double, 6, 12>::Zero();
  for (int i = 0; i < 4; ++i) {
    const double gx = inv(1, i), gy = inv(2, i), gz = inv(3, i);
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
  return volume * b.transpose() * hooke_matrix(modulus, poisson) * b;
}

}  // namespace

std::shared_ptr<const CoarseSpace> linear_coarse_space(const TetMesh& mesh, const MaterialSpec& mat,
                                                       const LinearSystem& constrained) {
  mat.validate();
  const int nn = static_cast<int>(mesh.nodes.size());
  if (constrained.full_size != 3 * nn) throw Error("linear_coarse_space: system does not match the mesh");
  auto fine_dof = [&](int d) { return constrained.dof_map.empty() ? d : constrained.dof_map[d]; };

  std::vector<int> corner(nn, -1);
  int n_corner = 0;
  std::vector<std::array<int, 2>> parents(nn, {-1, -1});
  for (const auto& el : mesh.elements) {
    for (int i = 0; i < 4; ++i)
      if (corner[el[i]] < 0) corner[el[i]] = n_corner++;
    for (int k = 0; k < 6; ++k) parents[el[4 + k]] = {el[detail::kEdges[k][0]], el[detail::kEdges[k][1]]};
  }
  // A coarse DOF is free when its corner's fine DOF is.
  std::vector<int> coarse(3 * static_cast<std::size_t>(n_corner), -1);
  int n_coarse = 0;
  for (int n = 0; n < nn; ++n)
    if (corner[n] >= 0)
      for (int c = 0; c < 3; ++c)
        if (fine_dof(3 * n + c) >= 0) coarse[3 * corner[n] + c] = n_coarse++;
  auto coarse_dof = [&](int node, int c) { return coarse[3 * corner[node] + c]; };

  auto out = std::make_shared<CoarseSpace>();
  std::vector<Eigen::Triplet<double>> trip;
  for (int n = 0; n < nn; ++n)
    for (int c = 0; c < 3; ++c) {
      const int i = fine_dof(3 * n + c);
      if (i < 0) continue;
      if (corner[n] >= 0) {
        trip.emplace_back(i, coarse_dof(n, c), 1.0);
      } else {
        if (parents[n][0] < 0) throw Error("linear_coarse_space: node " + std::to_string(n) + " is in no element");
        for (int p : parents[n])
          if (const int j = coarse_dof(p, c); j >= 0) trip.emplace_back(i, j, 0.5);
      }
    }
  out->prolongation.resize(constrained.size(), n_coarse);
  out->prolongation.setFromTriplets(trip.begin(), trip.end());

  trip.clear();
  trip.reserve(mesh.elements.size() * 78);
  const double e_ilt = 1.0 / mat.compliance_ratio;
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    const auto& el = mesh.elements[e];
    const std::array<Vec3, 4> x = {mesh.nodes[el[0]], mesh.nodes[el[1]], mesh.nodes[el[2]], mesh.nodes[el[3]]};
    const auto k = linear_stiffness(x, mesh.regions[e] == Region::Wall ? 1.0 : e_ilt, mat.poisson);
    for (int a = 0; a < 12; ++a) {
      const int col = coarse_dof(el[a / 3], a % 3);
      if (col < 0) continue;
      for (int b = 0; b < 12; ++b) {
        const int row = coarse_dof(el[b / 3], b % 3);
        if (row >= col) trip.emplace_back(row, col, k(b, a));
      }
    }
  }
  out->lower.resize(n_coarse, n_coarse);
  out->lower.setFromTriplets(trip.begin(), trip.end());
  return out;
}

}  // namespace aaa::solver
