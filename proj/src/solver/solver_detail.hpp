#pragma once

#include "aaa/solver.hpp"

namespace aaa::solver::detail {

inline constexpr int kEdges[6][2] = {{0, 1}, {1, 2}, {0, 2}, {0, 3}, {1, 3}, {2, 3}};

// Four-point rule on the tetrahedron, degree 2.
inline constexpr double kGaussA = 0.5854101966249685;
inline constexpr double kGaussB = 0.1381966011250105;
inline constexpr double kGaussWeight = 1.0 / 24.0;

/// Barycentric coordinates of the Gauss points; point g has L_g = a.
const std::array<std::array<double, 4>, 4>& gauss_points();

/// Cartesian gradients of the 10 shape functions at barycentric point l.
Eigen::Matrix<double, 10, 3> shape_gradients(const std::array<Vec3, 10>& x, const std::array<double, 4>& l,
                                             double* det_j);
Eigen::Matrix<double, 6, 30> strain_matrix(const Eigen::Matrix<double, 10, 3>& gradients);
std::array<Vec3, 10> element_nodes(const meshing::TetMesh& mesh, int element);

/// Stress recovery with explicit per-region moduli (any consistent unit).
StressField recover(const meshing::TetMesh& mesh, const Eigen::VectorXd& u, double wall_modulus, double ilt_modulus,
                    double poisson);

}  // namespace aaa::solver::detail
