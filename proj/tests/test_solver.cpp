#include "aaa/meshing.hpp"
#include "aaa/phantoms.hpp"
#include "aaa/solver.hpp"
#include "fixtures.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

using namespace aaa;
using namespace aaa::solver;
using meshing::Region;
using meshing::TetMesh;

namespace {

std::array<Vec3, 10> element_coords(const TetMesh& m, int e) {
  std::array<Vec3, 10> x;
  for (int k = 0; k < 10; ++k) x[k] = m.nodes[m.elements[e][k]];
  return x;
}

Eigen::MatrixXd dense_full(const Eigen::SparseMatrix<double>& lower) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(lower.rows(), lower.cols());
  for (int j = 0; j < lower.outerSize(); ++j)
    for (Eigen::SparseMatrix<double>::InnerIterator it(lower, j); it; ++it) {
      d(it.row(), j) = it.value();
      d(j, it.row()) = it.value();
    }
  return d;
}

/// Element matrices scattered into a dense matrix, physical moduli.
Eigen::MatrixXd dense_oracle(const TetMesh& m, const MaterialSpec& mat) {
  const int n = 3 * static_cast<int>(m.nodes.size());
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
  for (int e = 0; e < static_cast<int>(m.elements.size()); ++e) {
    const auto ke = element_stiffness(element_coords(m, e), mat.modulus_mpa(m.regions[e]), mat.poisson);
    for (int a = 0; a < 10; ++a)
      for (int b = 0; b < 10; ++b)
        k.block<3, 3>(3 * m.elements[e][a], 3 * m.elements[e][b]) += ke.block<3, 3>(3 * a, 3 * b);
  }
  return k;
}

/// Largest root of the characteristic cubic by Newton from above.
double cubic_root_oracle(const SymTensor& s) {
  const Eigen::Matrix3d a = to_matrix(s);
  const double i1 = a.trace();
  const double i2 = 0.5 * (i1 * i1 - (a * a).trace());
  const double i3 = a.determinant();
  auto p = [&](double l) { return ((l - i1) * l + i2) * l - i3; };
  auto dp = [&](double l) { return (3.0 * l - 2.0 * i1) * l + i2; };
  double l = a.cwiseAbs().rowwise().sum().maxCoeff() + 1.0;
  for (int it = 0; it < 500; ++it) {
    const double d = dp(l);
    if (d <= 0.0) break;
    const double next = l - p(l) / d;
    if (!(next < l)) break;
    l = next;
  }
  return l;
}

TetMesh tube_mesh(double r_ext, double r_lumen, int n_theta, int n_z, double length,
                  meshing::LayeredMeshConfig cfg = {}) {
  return meshing::build_layered_mesh(phantoms::tube(r_ext, length, n_theta, n_z),
                                     phantoms::tube(r_lumen, length, n_theta, n_z), cfg);
}

double max_rel_diff(const std::vector<SymTensor>& a, const std::vector<SymTensor>& b) {
  double scale = 0.0, diff = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n)
    for (int k = 0; k < 6; ++k) {
      scale = std::max(scale, std::abs(a[n][k]));
      diff = std::max(diff, std::abs(a[n][k] - b[n][k]));
    }
  return diff / scale;
}

}  // namespace

TEST_CASE("element stiffness of a regular tetrahedron") {
  const std::array<Vec3, 4> c{Vec3(1, 1, 1), Vec3(-1, 1, -1), Vec3(1, -1, -1), Vec3(-1, -1, 1)};
  const auto m = fixture::from_corners({c[0], c[1], c[2], c[3]}, {{0, 1, 2, 3}});
  const auto k = element_stiffness(element_coords(m, 0), 210.0, 0.3);
  CHECK((k - k.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * k.cwiseAbs().maxCoeff());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(k);
  const auto& ev = eig.eigenvalues();
  int zero = 0;
  for (int i = 0; i < ev.size(); ++i) {
    CHECK(ev[i] > -1e-10 * ev.maxCoeff());
    zero += std::abs(ev[i]) < 1e-10 * ev.maxCoeff();
  }
  CHECK(zero == 6);

  const auto k2 = element_stiffness(element_coords(m, 0), 420.0, 0.3);
  CHECK((k2 - 2.0 * k).cwiseAbs().maxCoeff() <= 1e-12 * k2.cwiseAbs().maxCoeff());
}

TEST_CASE("assembly matches a dense scatter oracle") {
  auto m = fixture::five_tet_box(1.0, 2.0, 1.5);
  m.regions[2] = Region::Ilt;
  MaterialSpec mat;
  mat.wall_modulus = 3e6;
  mat.compliance_ratio = 4.0;
  mat.poisson = 0.45;
  const auto a = assemble(m, mat);
  const Eigen::MatrixXd k = a.scale * dense_full(a.system.lower);
  const Eigen::MatrixXd oracle = dense_oracle(m, mat);
  CHECK((k - oracle).cwiseAbs().maxCoeff() <= 1e-12 * oracle.cwiseAbs().maxCoeff());
  CHECK(a.system.full_size == 3 * static_cast<int>(m.nodes.size()));

  SUBCASE("doubling E doubles every entry") {
    auto mat2 = mat;
    mat2.wall_modulus *= 2.0;
    const auto a2 = assemble(m, mat2);
    const Eigen::MatrixXd k2 = a2.scale * dense_full(a2.system.lower);
    CHECK((k2 - 2.0 * k).cwiseAbs().maxCoeff() <= 1e-12 * k2.cwiseAbs().maxCoeff());
  }
  SUBCASE("bad material") {
    auto bad = mat;
    bad.poisson = 0.5;
    CHECK_THROWS_AS(assemble(m, bad), Error);
    bad = mat;
    bad.compliance_ratio = 0.0;
    CHECK_THROWS_AS(assemble(m, bad), Error);
  }
}

TEST_CASE("constraints") {
  const auto m = fixture::five_tet_box();
  const auto a = assemble(m, {});
  CHECK_THROWS_AS(apply_constraints(a.system, {}, {}), Error);

  std::vector<int> all(m.nodes.size());
  for (std::size_t n = 0; n < all.size(); ++n) all[n] = static_cast<int>(n);
  const auto fixed = apply_constraints(a.system, all, {});
  CHECK(fixed.size() == 0);
  Eigen::VectorXd load = Eigen::VectorXd::Constant(a.system.full_size, 3.0);
  const auto u = solve(fixed, load);
  CHECK(u.size() == a.system.full_size);
  CHECK(u.cwiseAbs().maxCoeff() == 0.0);

  // Constrained system keeps the free block of the full matrix.
  std::vector<int> bottom;
  for (std::size_t n = 0; n < m.nodes.size(); ++n)
    if (m.nodes[n].z() == 0.0) bottom.push_back(static_cast<int>(n));
  const auto c = apply_constraints(a.system, {}, bottom);
  const Eigen::MatrixXd full = dense_full(a.system.lower), reduced = dense_full(c.lower);
  for (int i = 0; i < c.full_size; ++i)
    for (int j = 0; j < c.full_size; ++j)
      if (c.dof_map[i] >= 0 && c.dof_map[j] >= 0) CHECK(reduced(c.dof_map[i], c.dof_map[j]) == full(i, j));
  Eigen::LLT<Eigen::MatrixXd> llt(reduced);
  CHECK(llt.info() == Eigen::Success);
}

TEST_CASE("pressure loads") {
  const auto box = fixture::five_tet_box(2.0, 3.0, 1.0);
  const auto table = [&] {
    std::map<std::array<int, 3>, std::vector<meshing::FaceRef>> t;
    for (int e = 0; e < static_cast<int>(box.elements.size()); ++e)
      for (int f = 0; f < 4; ++f) {
        const auto n = meshing::face_nodes(box.elements[e], f);
        std::array<int, 3> key{n[0], n[1], n[2]};
        std::sort(key.begin(), key.end());
        t[key].push_back({e, f});
      }
    return t;
  }();
  std::vector<meshing::FaceRef> boundary, top;
  for (const auto& [key, refs] : table)
    if (refs.size() == 1) {
      boundary.push_back(refs[0]);
      if (box.nodes[key[0]].z() == 1.0 && box.nodes[key[1]].z() == 1.0 && box.nodes[key[2]].z() == 1.0)
        top.push_back(refs[0]);
    }
  REQUIRE(boundary.size() == 12);
  REQUIRE(top.size() == 2);
  const double p_kpa = 13.0, p = 13e-3;

  SUBCASE("flat face set") {
    const auto f = apply_pressure(box, top, p_kpa);
    Vec3 total = Vec3::Zero();
    for (std::size_t n = 0; n < box.nodes.size(); ++n) total += f.segment<3>(3 * n);
    const double area = 6.0;
    CHECK(std::abs(total.z() + p * area) <= 1e-12 * p * area);
    CHECK(std::abs(total.x()) <= 1e-12 * p * area);
    CHECK(std::abs(total.y()) <= 1e-12 * p * area);
  }
  SUBCASE("one straight 6-node face") {
    const auto face = top[0];
    const auto n = meshing::face_nodes(box.elements[face.element], face.face);
    const double area = 0.5 * (box.nodes[n[1]] - box.nodes[n[0]]).cross(box.nodes[n[2]] - box.nodes[n[0]]).norm();
    const auto f = apply_pressure(box, {face}, p_kpa);
    for (int k = 0; k < 3; ++k) CHECK(f.segment<3>(3 * n[k]).norm() <= 1e-15 * p * area);
    for (int k = 3; k < 6; ++k) {
      CHECK(f[3 * n[k] + 2] == doctest::Approx(-p * area / 3.0).epsilon(1e-12));
      CHECK(std::abs(f[3 * n[k]]) <= 1e-15 * p * area);
    }
  }
  SUBCASE("closed face set") {
    const auto f = apply_pressure(box, boundary, p_kpa);
    Vec3 total = Vec3::Zero();
    double magnitude = 0.0;
    for (std::size_t n = 0; n < box.nodes.size(); ++n) {
      total += f.segment<3>(3 * n);
      magnitude += f.segment<3>(3 * n).norm();
    }
    CHECK(total.norm() <= 1e-10 * magnitude);
  }
  SUBCASE("closed curved face set") {
    const auto sphere_mesh =
        meshing::build_layered_mesh(phantoms::sphere(20.0, 48, 24), phantoms::sphere(15.0, 48, 24), {});
    const auto f = apply_pressure(sphere_mesh, sphere_mesh.luminal, p_kpa);
    Vec3 total = Vec3::Zero();
    double magnitude = 0.0;
    for (std::size_t n = 0; n < sphere_mesh.nodes.size(); ++n) {
      total += f.segment<3>(3 * n);
      magnitude += f.segment<3>(3 * n).norm();
    }
    CHECK(total.norm() <= 1e-10 * magnitude);
  }
  SUBCASE("zero-area face") {
    std::vector<Vec3> pts{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0), Vec3(0, 0, 1)};
    const auto flat = fixture::from_corners(pts, {{0, 1, 2, 3}});
    CHECK_THROWS_AS(apply_pressure(flat, {{0, 0}}, p_kpa), Error);
  }
}

TEST_CASE("conjugate gradients") {
  SUBCASE("identity") {
    LinearSystem s;
    s.full_size = 5;
    s.lower.resize(5, 5);
    s.lower.setIdentity();
    const Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(5, -2.0, 7.0);
    for (auto pc : {Preconditioner::Jacobi, Preconditioner::Cholesky}) {
      SolverOptions opt;
      opt.preconditioner = pc;
      CHECK((solve(s, b, opt) - b).norm() <= 1e-14);
    }
  }
  SUBCASE("three-node bar fixed at node 0") {
    // Two springs of stiffness k; a force F at the free end.
    const double k = 4.0, force = 3.0;
    LinearSystem s;
    s.full_size = 3;
    s.dof_map = {-1, 0, 1};
    s.lower.resize(2, 2);
    s.lower.insert(0, 0) = 2 * k;
    s.lower.insert(1, 0) = -k;
    s.lower.insert(1, 1) = k;
    const Eigen::Vector3d load(17.0, 0.0, force);
    for (auto pc : {Preconditioner::Jacobi, Preconditioner::Cholesky}) {
      SolverOptions opt;
      opt.preconditioner = pc;
      SolveReport rep;
      const auto u = solve(s, load, opt, &rep);
      CHECK(u[0] == 0.0);
      CHECK(u[1] == doctest::Approx(force / k).epsilon(1e-12));
      CHECK(u[2] == doctest::Approx(2 * force / k).epsilon(1e-12));
      CHECK(rep.relative_residual <= 1e-9);
    }
  }
  SUBCASE("non-convergence reports the residual history") {
    const auto m = tube_mesh(13.5, 12.0, 16, 5, 20.0);
    const auto a = assemble(m, {});
    const auto c = apply_constraints(a.system, m.top, m.bottom);
    SolverOptions opt;
    opt.preconditioner = Preconditioner::Jacobi;
    opt.max_iterations = 3;
    const auto f = apply_pressure(m, m.luminal, 13.0);
    try {
      solve(c, f, opt);
      FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
      CHECK(e.history().size() == 3);
      CHECK(std::string(e.what()).find("no convergence") != std::string::npos);
    }
  }
  SUBCASE("Jacobi PCG converges on a constrained cylinder") {
    const auto m = tube_mesh(13.5, 12.0, 24, 7, 30.0);
    const auto a = assemble(m, {});
    const auto c = apply_constraints(a.system, m.top, m.bottom);
    const auto f = apply_pressure(m, m.luminal, 13.0);
    SolverOptions jac;
    jac.preconditioner = Preconditioner::Jacobi;
    SolveReport rj, rc;
    const auto uj = solve(c, f, jac, &rj);
    const auto uc = solve(c, f, {}, &rc);
    CHECK(rj.relative_residual <= 1e-9);
    CHECK(rc.relative_residual <= 1e-9);
    CHECK(rc.iterations <= 3);
    CHECK((uj - uc).norm() <= 1e-6 * uc.norm());
  }
}

TEST_CASE("linear coarse space") {
  // Wall and thrombus, so both moduli enter.
  const auto m = tube_mesh(20.0, 10.0, 12, 4, 12.0);
  REQUIRE(m.count(Region::Ilt) > 0);
  MaterialSpec mat;
  mat.compliance_ratio = 7.0;
  const auto a = assemble(m, mat);
  const auto c = apply_constraints(a.system, m.top, m.bottom);
  const auto cs = linear_coarse_space(m, mat, c);

  SUBCASE("coarse stiffness is the Galerkin product") {
    const Eigen::MatrixXd p(cs->prolongation);
    const Eigen::MatrixXd galerkin = p.transpose() * dense_full(c.lower) * p;
    const Eigen::MatrixXd coarse = dense_full(cs->lower);
    CHECK((galerkin - coarse).cwiseAbs().maxCoeff() <= 1e-10 * coarse.cwiseAbs().maxCoeff());
  }
  SUBCASE("prolongation reproduces linear fields") {
    // Coarse DOFs follow the free DOFs of the corner nodes in node order.
    std::vector<char> is_corner(m.nodes.size(), 0);
    for (const auto& el : m.elements)
      for (int i = 0; i < 4; ++i) is_corner[el[i]] = 1;
    std::vector<int> corner_order;
    for (std::size_t n = 0; n < m.nodes.size(); ++n)
      if (is_corner[n]) corner_order.push_back(static_cast<int>(n));
    auto field = [](const Vec3& x) { return Vec3(0.3 * x.x() - x.z(), 2.0 * x.y(), 0.1 * x.x() + x.y()); };
    Eigen::VectorXd uc(cs->prolongation.cols());
    int k = 0;
    for (int n : corner_order)
      for (int d = 0; d < 3; ++d)
        if (c.dof_map[3 * n + d] >= 0) uc[k++] = field(m.nodes[n])[d];
    REQUIRE(k == uc.size());
    const Eigen::VectorXd uf = cs->prolongation * uc;
    // Away from the constrained ends the interpolation is exact.
    for (std::size_t n = 0; n < m.nodes.size(); ++n) {
      if (m.nodes[n].z() < 4.0 || m.nodes[n].z() > 8.0) continue;
      for (int d = 0; d < 3; ++d) CHECK(uf[c.dof_map[3 * n + d]] == doctest::Approx(field(m.nodes[n])[d]).epsilon(1e-12));
    }
  }
  SUBCASE("multigrid PCG agrees with the direct solve") {
    auto with_coarse = c;
    with_coarse.coarse = cs;
    const auto f = apply_pressure(m, m.luminal, 13.0);
    SolverOptions mg, direct, jacobi;
    mg.preconditioner = Preconditioner::Multigrid;
    direct.preconditioner = Preconditioner::Cholesky;
    jacobi.preconditioner = Preconditioner::Jacobi;
    SolveReport rm, rd, rj;
    const auto um = solve(with_coarse, f, mg, &rm);
    const auto ud = solve(c, f, direct, &rd);
    solve(c, f, jacobi, &rj);
    CHECK(rm.relative_residual <= 1e-9);
    CHECK(rm.backend.rfind("multigrid", 0) == 0);
    CHECK(rm.iterations < rj.iterations);
    CHECK((um - ud).norm() <= 1e-7 * ud.norm());
  }
  SUBCASE("multigrid needs a coarse space") {
    SolverOptions mg;
    mg.preconditioner = Preconditioner::Multigrid;
    CHECK_THROWS_AS(solve(c, apply_pressure(m, m.luminal, 13.0), mg), Error);
  }
  SUBCASE("auto picks the direct solve for small systems") {
    auto with_coarse = c;
    with_coarse.coarse = cs;
    SolveReport r;
    solve(with_coarse, apply_pressure(m, m.luminal, 13.0), {}, &r);
    CHECK(r.backend.rfind("multigrid", 0) != 0);
  }
  SUBCASE("mismatched mesh") { CHECK_THROWS_AS(linear_coarse_space(fixture::five_tet_box(), mat, c), Error); }
}

TEST_CASE("max principal stress") {
  CHECK(max_principal(SymTensor{3, 1, 2, 0, 0, 0}) == 3.0);
  CHECK(max_principal(SymTensor{0, 0, 0, 5, 0, 0}) == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(max_principal(SymTensor{4, 4, 4, 0, 0, 0}) == 4.0);
  Eigen::Matrix3d nonsym = Eigen::Matrix3d::Identity();
  nonsym(0, 1) = 1.0;
  CHECK_THROWS_AS(max_principal(nonsym), Error);

  std::mt19937 rng(99);
  std::uniform_real_distribution<double> d(-100.0, 100.0);
  for (int trial = 0; trial < 2000; ++trial) {
    SymTensor s;
    for (double& v : s) v = d(rng);
    if (trial % 4 == 0) s[3] = s[4] = 0.0;  // partially diagonal
    const auto e = principal_values(s);
    const double scale = to_matrix(s).norm();
    CHECK(e[0] >= e[1]);
    CHECK(e[1] >= e[2]);
    CHECK(std::abs(e[0] - cubic_root_oracle(s)) <= 1e-9 * scale);
    CHECK(e[0] >= (s[0] + s[1] + s[2]) / 3.0 - 1e-12 * scale);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(to_matrix(s));
    CHECK(std::abs(e[2] - eig.eigenvalues()[0]) <= 1e-9 * scale);
  }
}

TEST_CASE("stress recovery patch tests") {
  const auto m = tube_mesh(13.5, 9.0, 24, 7, 30.0);
  REQUIRE(m.count(Region::Ilt) > 0);
  MaterialSpec mat;
  const double nu = mat.poisson;
  const std::size_t nn = m.nodes.size();

  SUBCASE("uniform uniaxial stretch") {
    const double eps = 1e-3;
    Eigen::VectorXd u = Eigen::VectorXd::Zero(3 * nn);
    for (std::size_t n = 0; n < nn; ++n) u[3 * n + 2] = eps * m.nodes[n].z();
    const auto field = recover_stress(m, u, mat);
    const auto wall = wall_nodes(m);
    for (std::size_t n = 0; n < nn; ++n) {
      const double e = wall[n] ? mat.modulus_mpa(Region::Wall) : mat.modulus_mpa(Region::Ilt);
      const double lambda = e * nu / ((1 + nu) * (1 - 2 * nu)), mu = e / (2 * (1 + nu));
      const double szz = (lambda + 2 * mu) * eps, sxx = lambda * eps;
      CHECK(std::abs(field.tensor[n][2] - szz) <= 1e-10 * szz);
      CHECK(std::abs(field.tensor[n][0] - sxx) <= 1e-10 * szz);
      CHECK(std::abs(field.tensor[n][1] - sxx) <= 1e-10 * szz);
      for (int k = 3; k < 6; ++k) CHECK(std::abs(field.tensor[n][k]) <= 1e-10 * szz);
    }
    // A linear field is in equilibrium at every node off the boundary.
    const auto ku = internal_forces(m, mat, u);
    const auto table_boundary = [&] {
      std::map<std::array<int, 3>, int> count;
      for (const auto& el : m.elements)
        for (int f = 0; f < 4; ++f) {
          const auto fn = meshing::face_nodes(el, f);
          std::array<int, 3> key{fn[0], fn[1], fn[2]};
          std::sort(key.begin(), key.end());
          ++count[key];
        }
      std::vector<char> on(nn, 0);
      for (const auto& el : m.elements)
        for (int f = 0; f < 4; ++f) {
          const auto fn = meshing::face_nodes(el, f);
          std::array<int, 3> key{fn[0], fn[1], fn[2]};
          std::sort(key.begin(), key.end());
          if (count[key] == 1)
            for (int k : fn) on[k] = 1;
        }
      return on;
    }();
    // Nodes on the wall/ILT interface see a traction jump and are skipped.
    std::vector<char> touched[2] = {std::vector<char>(nn, 0), std::vector<char>(nn, 0)};
    for (std::size_t e = 0; e < m.elements.size(); ++e)
      for (int n : m.elements[e]) touched[static_cast<int>(m.regions[e])][n] = 1;
    double interior = 0.0;
    for (std::size_t n = 0; n < nn; ++n)
      if (!table_boundary[n] && !(touched[0][n] && touched[1][n])) interior = std::max(interior, ku.segment<3>(3 * n).norm());
    CHECK(interior <= 1e-10 * ku.cwiseAbs().maxCoeff());
  }
  SUBCASE("rigid motion gives zero stress") {
    Eigen::VectorXd u(3 * nn);
    const Vec3 shift(0.3, -0.2, 0.7), omega(1e-3, -2e-3, 5e-4);
    for (std::size_t n = 0; n < nn; ++n) u.segment<3>(3 * n) = shift + omega.cross(m.nodes[n]);
    const auto field = recover_stress(m, u, mat);
    const double ref = mat.modulus_mpa(Region::Wall) * 1e-3;
    for (const auto& t : field.tensor)
      for (double v : t) CHECK(std::abs(v) <= 1e-10 * ref);
  }
}

TEST_CASE("USH averaging") {
  const auto m = tube_mesh(13.5, 9.0, 16, 5, 20.0);
  const std::size_t nn = m.nodes.size();
  const auto wall = wall_nodes(m);

  SUBCASE("uniform field is unchanged") {
    StressField f;
    f.tensor.assign(nn, SymTensor{1, 2, 3, 4, 5, 6});
    f.max_principal.assign(nn, max_principal(f.tensor[0]));
    const auto g = ush_average(f, m);
    CHECK(g.kind == StressKind::UshAveraged);
    for (std::size_t n = 0; n < nn; ++n)
      for (int k = 0; k < 6; ++k) CHECK(g.tensor[n][k] == doctest::Approx(f.tensor[n][k]).epsilon(1e-14));
  }
  SUBCASE("linear through-thickness profile averages to its midpoint") {
    const double a = 2.0, b = 6.0, t = 1.5;
    StressField f;
    f.tensor.assign(nn, SymTensor{});
    for (std::size_t n = 0; n < nn; ++n)
      if (m.column_vertex[n] >= 0) f.tensor[n] = SymTensor{a + b * m.column_position[n] / t, 0, 0, 0, 0, 0};
    f.max_principal.assign(nn, 0.0);
    const auto g = ush_average(f, m);
    for (std::size_t n = 0; n < nn; ++n)
      if (m.column_vertex[n] >= 0) CHECK(g.tensor[n][0] == doctest::Approx(a + b / 2).epsilon(1e-13));
  }
  SUBCASE("projection, ILT untouched") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    StressField f;
    f.tensor.resize(nn);
    for (auto& t : f.tensor)
      for (double& v : t) v = d(rng);
    f.max_principal.resize(nn);
    const auto once = ush_average(f, m);
    const auto twice = ush_average(once, m);
    CHECK(max_rel_diff(once.tensor, twice.tensor) <= 1e-14);
    for (std::size_t n = 0; n < nn; ++n) {
      if (!wall[n]) CHECK(once.tensor[n] == f.tensor[n]);
      CHECK(once.max_principal[n] == doctest::Approx(max_principal(once.tensor[n])));
    }
  }
  SUBCASE("requires node columns") {
    auto bare = m;
    bare.column_vertex.clear();
    bare.column_position.clear();
    StressField f;
    f.tensor.assign(nn, SymTensor{});
    CHECK_THROWS_WITH_AS(ush_average(f, bare), doctest::Contains("raw"), Error);
  }
}

TEST_CASE("thick cylinder against the Lame solution") {
  const double ri = 12.0, ro = 13.5, p_kpa = 13.0, length = 100.0;
  const auto m = tube_mesh(ro, ri, 64, 31, length);
  MaterialSpec mat;
  const auto res = run_case(m, mat, {p_kpa, true});
  const double p = p_kpa * 1e-3, e = mat.modulus_mpa(Region::Wall), nu = mat.poisson;
  const double a_coef = p * ri * ri / (ro * ro - ri * ri), b_coef = a_coef * ro * ro;
  const double hoop_inner = p * (ro * ro + ri * ri) / (ro * ro - ri * ri);
  for (std::size_t n = 0; n < m.nodes.size(); ++n) {
    const Vec3& x = m.nodes[n];
    if (std::abs(x.z() - length / 2) > 3.0) continue;
    const double r = std::hypot(x.x(), x.y());
    // Plane strain holds away from the clamped ends.
    const double ur = (1 + nu) / e * ((1 - 2 * nu) * a_coef * r + b_coef / r);
    const Vec3 u = res.displacement.segment<3>(3 * n);
    CHECK((u.x() * x.x() + u.y() * x.y()) / r == doctest::Approx(ur).epsilon(0.02));
    if (std::abs(r - ri) < 1e-6) CHECK(res.raw.max_principal[n] == doctest::Approx(hoop_inner).epsilon(0.03));
  }
  CHECK(res.strain_energy == doctest::Approx(res.external_work).epsilon(1e-9));
}

TEST_CASE("run_case properties") {
  SUBCASE("no ILT present: include_ilt has no effect") {
    const auto m = tube_mesh(13.5, 12.0, 24, 9, 40.0);
    REQUIRE(m.count(Region::Ilt) == 0);
    const auto with = run_case(m, {}, {13.0, true});
    const auto without = run_case(m, {}, {13.0, false});
    CHECK(with.raw.tensor == without.raw.tensor);
    CHECK(with.ush->tensor == without.ush->tensor);
  }
  const auto m = tube_mesh(13.5, 8.0, 24, 9, 40.0);
  REQUIRE(m.count(Region::Ilt) > 0);
  const auto base = run_case(m, {}, {13.0, true});
  SUBCASE("wall modulus scaling leaves stresses unchanged") {
    MaterialSpec stiff;
    stiff.wall_modulus *= 10.0;
    const auto scaled = run_case(m, stiff, {13.0, true});
    CHECK(max_rel_diff(base.raw.tensor, scaled.raw.tensor) < 1e-8);
    CHECK((scaled.displacement * 10.0 - base.displacement).norm() <= 1e-8 * base.displacement.norm());
  }
  SUBCASE("the compliance ratio matters") {
    MaterialSpec soft;
    soft.compliance_ratio = 5.0;
    const auto other = run_case(m, soft, {13.0, true});
    CHECK(max_rel_diff(base.raw.tensor, other.raw.tensor) > 1e-3);
  }
  SUBCASE("dropping the ILT raises the wall peak") {
    const auto bare = run_case(m, {}, {13.0, false});
    const auto wall_base = wall_nodes(base.mesh), wall_bare = wall_nodes(bare.mesh);
    double peak_base = 0.0, peak_bare = 0.0;
    for (std::size_t n = 0; n < base.mesh.nodes.size(); ++n)
      if (wall_base[n]) peak_base = std::max(peak_base, base.raw.max_principal[n]);
    for (std::size_t n = 0; n < bare.mesh.nodes.size(); ++n)
      if (wall_bare[n]) peak_bare = std::max(peak_bare, bare.raw.max_principal[n]);
    CHECK(peak_bare > peak_base);
  }
  SUBCASE("energy balance") { CHECK(base.strain_energy == doctest::Approx(base.external_work).epsilon(1e-9)); }
  SUBCASE("rejects non-positive pressure") { CHECK_THROWS_AS(run_case(m, {}, {0.0, true}), Error); }
}

TEST_CASE("global equilibrium under a one-sided load") {
  const auto m = tube_mesh(13.5, 12.0, 32, 9, 40.0);
  std::vector<meshing::FaceRef> half;
  for (const auto& f : m.luminal) {
    const auto n = meshing::face_nodes(m.elements[f.element], f.face);
    if (m.nodes[n[0]].y() + m.nodes[n[1]].y() + m.nodes[n[2]].y() > 0.0) half.push_back(f);
  }
  MaterialSpec mat;
  const auto a = assemble(m, mat);
  const auto c = apply_constraints(a.system, m.top, m.bottom);
  const auto f = apply_pressure(m, half, 13.0);
  const Eigen::VectorXd u = solve(c, f) / a.scale;
  const auto ku = internal_forces(m, mat, u);
  Vec3 applied = Vec3::Zero(), reaction = Vec3::Zero();
  for (int i = 0; i < c.full_size; ++i) {
    applied[i % 3] += f[i];
    if (c.dof_map[i] < 0) reaction[i % 3] += ku[i] - f[i];
  }
  REQUIRE(applied.norm() > 1.0);
  CHECK((reaction + applied).norm() <= 1e-8 * applied.norm());
  CHECK(u.dot(ku) == doctest::Approx(u.dot(f)).epsilon(1e-9));
}
