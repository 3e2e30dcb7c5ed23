#include "aaa/solver.hpp"

#include "solver_detail.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace aaa::solver {

using meshing::Region;
using meshing::TetMesh;

Eigen::Matrix3d to_matrix(const SymTensor& s) {
  Eigen::Matrix3d m;
  m << s[0], s[3], s[5], s[3], s[1], s[4], s[5], s[4], s[2];
  return m;
}

std::array<double, 3> principal_values(const SymTensor& s) {
  const double q = (s[0] + s[1] + s[2]) / 3.0;
  const double off = s[3] * s[3] + s[4] * s[4] + s[5] * s[5];
  const double d0 = s[0] - q, d1 = s[1] - q, d2 = s[2] - q;
  const double p2 = d0 * d0 + d1 * d1 + d2 * d2 + 2.0 * off;
  if (p2 == 0.0) return {q, q, q};
  if (off == 0.0) {
    std::array<double, 3> e{s[0], s[1], s[2]};
    std::sort(e.begin(), e.end(), std::greater<>());
    return e;
  }
  const double p = std::sqrt(p2 / 6.0);
  // det((A - qI) / p) / 2, clamped against round-off.
  const double b0 = d0 / p, b1 = d1 / p, b2 = d2 / p, bxy = s[3] / p, byz = s[4] / p, bxz = s[5] / p;
  const double det = b0 * (b1 * b2 - byz * byz) - bxy * (bxy * b2 - byz * bxz) + bxz * (bxy * byz - b1 * bxz);
  const double r = std::clamp(det / 2.0, -1.0, 1.0);
  const double phi = std::acos(r) / 3.0;
  const double pi = std::acos(-1.0);
  const double e1 = q + 2.0 * p * std::cos(phi);
  const double e3 = q + 2.0 * p * std::cos(phi + 2.0 * pi / 3.0);
  const double e2 = 3.0 * q - e1 - e3;
  return {e1, e2, e3};
}

double max_principal(const SymTensor& s) { return principal_values(s)[0]; }

double max_principal(const Eigen::Matrix3d& m) {
  const double scale = m.cwiseAbs().maxCoeff();
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw Error("max_principal: tensor is not symmetric");
  return max_principal(SymTensor{m(0, 0), m(1, 1), m(2, 2), m(0, 1), m(1, 2), m(0, 2)});
}

std::vector<char> wall_nodes(const TetMesh& mesh) {
  std::vector<char> wall(mesh.nodes.size(), 0);
  for (std::size_t e = 0; e < mesh.elements.size(); ++e)
    if (mesh.regions[e] == Region::Wall)
      for (int n : mesh.elements[e]) wall[n] = 1;
  return wall;
}

namespace {

/// For each mid-edge node, its two corner nodes (-1 for corners).
std::vector<std::array<int, 2>> mid_parents(const TetMesh& mesh) {
  std::vector<std::array<int, 2>> parent(mesh.nodes.size(), {-1, -1});
  for (const auto& el : mesh.elements)
    for (int k = 0; k < 6; ++k) parent[el[4 + k]] = {el[detail::kEdges[k][0]], el[detail::kEdges[k][1]]};
  return parent;
}

void fill_principal(StressField& f) {
  f.max_principal.resize(f.tensor.size());
  for (std::size_t n = 0; n < f.tensor.size(); ++n) f.max_principal[n] = max_principal(f.tensor[n]);
}

}  // namespace

namespace detail {

StressField recover(const TetMesh& mesh, const Eigen::VectorXd& u, double wall_modulus, double ilt_modulus,
                    double poisson) {
  if (u.size() != 3 * static_cast<Eigen::Index>(mesh.nodes.size()))
    throw Error("recover_stress: displacement size does not match the mesh");
  const std::size_t nn = mesh.nodes.size();
  const auto d_wall = hooke_matrix(wall_modulus, poisson);
  const auto d_ilt = hooke_matrix(ilt_modulus, poisson);
  const auto& gp = gauss_points();

  // Corner values per element, computed in parallel and accumulated in
  // element order.
  const std::size_t ne = mesh.elements.size();
  std::vector<std::array<SymTensor, 4>> corner(ne);
  std::vector<double> volume(ne);
  parallel_for(ne, 256, [&](std::size_t begin, std::size_t end) {
    for (std::size_t e = begin; e < end; ++e) {
      const auto x = element_nodes(mesh, static_cast<int>(e));
      const auto& d = mesh.regions[e] == Region::Wall ? d_wall : d_ilt;
      Eigen::Matrix<double, 30, 1> ue;
      for (int a = 0; a < 10; ++a) ue.segment<3>(3 * a) = u.segment<3>(3 * mesh.elements[e][a]);
      std::array<Eigen::Matrix<double, 6, 1>, 4> sg;
      double det = 0.0;
      for (int g = 0; g < 4; ++g) sg[g] = d * (strain_matrix(shape_gradients(x, gp[g], &det)) * ue);
      volume[e] = det / 6.0;
      // Linear field through the Gauss values: corner i gets
      // (s_i - b * sum) / (a - b).
      const Eigen::Matrix<double, 6, 1> sum = sg[0] + sg[1] + sg[2] + sg[3];
      for (int i = 0; i < 4; ++i) {
        const Eigen::Matrix<double, 6, 1> c = (sg[i] - kGaussB * sum) / (kGaussA - kGaussB);
        for (int k = 0; k < 6; ++k) corner[e][i][k] = c[k];
      }
    }
  });

  std::vector<SymTensor> acc[2];
  std::vector<double> weight[2];
  for (int r = 0; r < 2; ++r) {
    acc[r].assign(nn, SymTensor{});
    weight[r].assign(nn, 0.0);
  }
  for (std::size_t e = 0; e < ne; ++e) {
    const int r = static_cast<int>(mesh.regions[e]);
    for (int i = 0; i < 4; ++i) {
      const int n = mesh.elements[e][i];
      for (int k = 0; k < 6; ++k) acc[r][n][k] += volume[e] * corner[e][i][k];
      weight[r][n] += volume[e];
    }
  }

  // Region of each node: wall wherever a wall element touches it.
  std::vector<char> region(nn, 1);
  for (std::size_t e = 0; e < ne; ++e)
    if (mesh.regions[e] == Region::Wall)
      for (int n : mesh.elements[e]) region[n] = 0;
  for (int r = 0; r < 2; ++r)
    for (std::size_t n = 0; n < nn; ++n)
      if (weight[r][n] > 0.0)
        for (int k = 0; k < 6; ++k) acc[r][n][k] /= weight[r][n];

  StressField f;
  f.tensor.assign(nn, SymTensor{});
  const auto parent = mid_parents(mesh);
  for (std::size_t n = 0; n < nn; ++n) {
    const int r = region[n];
    const auto [a, b] = parent[n];
    if (a < 0) {
      f.tensor[n] = acc[r][n];
    } else {
      for (int k = 0; k < 6; ++k) f.tensor[n][k] = 0.5 * (acc[r][a][k] + acc[r][b][k]);
    }
  }
  fill_principal(f);
  return f;
}

}  // namespace detail

StressField recover_stress(const TetMesh& mesh, const Eigen::VectorXd& u, const MaterialSpec& mat) {
  mat.validate();
  return detail::recover(mesh, u, mat.modulus_mpa(Region::Wall), mat.modulus_mpa(Region::Ilt), mat.poisson);
}

StressField ush_average(const StressField& field, const TetMesh& mesh) {
  if (!mesh.has_columns())
    throw Error("ush_average: mesh has no through-thickness node columns (imported or external mesh); "
                "use the raw stress field instead");
  if (field.tensor.size() != mesh.nodes.size()) throw Error("ush_average: field does not match the mesh");
  StressField out = field;
  out.kind = StressKind::UshAveraged;

  std::map<int, std::vector<int>> columns;
  for (std::size_t n = 0; n < mesh.nodes.size(); ++n)
    if (mesh.column_vertex[n] >= 0) columns[mesh.column_vertex[n]].push_back(static_cast<int>(n));
  std::vector<char> on_column(mesh.nodes.size(), 0);
  for (auto& [v, nodes] : columns) {
    std::sort(nodes.begin(), nodes.end(), [&](int a, int b) {
      return mesh.column_position[a] < mesh.column_position[b] ||
             (mesh.column_position[a] == mesh.column_position[b] && a < b);
    });
    for (int n : nodes) on_column[n] = 1;
    const double span = mesh.column_position[nodes.back()] - mesh.column_position[nodes.front()];
    if (nodes.size() < 2 || !(span > 0.0)) continue;
    SymTensor mean{};
    for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
      const double h = mesh.column_position[nodes[k + 1]] - mesh.column_position[nodes[k]];
      for (int c = 0; c < 6; ++c) mean[c] += 0.5 * h * (field.tensor[nodes[k]][c] + field.tensor[nodes[k + 1]][c]);
    }
    for (double& c : mean) c /= span;
    for (int n : nodes) out.tensor[n] = mean;
  }

  const auto wall = wall_nodes(mesh);
  const auto parent = mid_parents(mesh);
  for (std::size_t n = 0; n < mesh.nodes.size(); ++n) {
    if (!wall[n] || on_column[n] || parent[n][0] < 0) continue;
    const int a = parent[n][0], b = parent[n][1];
    for (int c = 0; c < 6; ++c) out.tensor[n][c] = 0.5 * (out.tensor[a][c] + out.tensor[b][c]);
  }
  fill_principal(out);
  return out;
}

CaseResult run_case(const TetMesh& mesh, const MaterialSpec& mat, const LoadCase& load, const SolverOptions& options) {
  mat.validate();
  if (!(load.map_pressure > 0.0)) throw Error("run_case: pressure must be positive");
  CaseResult res;
  res.mesh = load.include_ilt ? mesh : meshing::without_ilt(mesh);
  const auto& m = res.mesh;
  if (m.luminal.empty()) throw Error("run_case: mesh has no LUMINAL faces to load");

  // The system is assembled with moduli relative to the wall, so stresses
  // come straight from the dimensionless solution.
  const auto assembly = assemble(m, mat);
  auto system = apply_constraints(assembly.system, m.top, m.bottom);
  if (options.preconditioner == Preconditioner::Multigrid ||
      (options.preconditioner == Preconditioner::Auto && system.size() > kDirectSolveLimit))
    system.coarse = linear_coarse_space(m, mat, system);
  const Eigen::VectorXd f = apply_pressure(m, m.luminal, load.map_pressure);
  const Eigen::VectorXd u_hat = solve(system, f, options, &res.report);
  res.displacement = u_hat / assembly.scale;
  res.raw = detail::recover(m, u_hat, 1.0, 1.0 / mat.compliance_ratio, mat.poisson);
  if (m.has_columns()) res.ush = ush_average(res.raw, m);

  const Eigen::VectorXd ku = internal_forces(m, mat, res.displacement);
  for (std::size_t n = 0; n < m.nodes.size(); ++n) res.applied_magnitude += f.segment<3>(3 * n).norm();
  for (int i = 0; i < system.full_size; ++i) {
    res.applied_total[i % 3] += f[i];
    if (system.dof_map[i] < 0) res.reaction_total[i % 3] += ku[i] - f[i];
  }
  res.strain_energy = 0.5 * res.displacement.dot(ku);
  res.external_work = 0.5 * res.displacement.dot(f);
  return res;
}

}  // namespace aaa::solver
