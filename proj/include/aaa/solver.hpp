#pragma once

#include "aaa/meshing.hpp"

#include <Eigen/Sparse>

#include <array>
#include <memory>
#include <optional>
#include <vector>

namespace aaa::solver {

/// Moduli in Pa. Internally the mesh is in mm, so stresses come out in MPa
/// (N/mm^2) and forces in N.
struct MaterialSpec {
  double wall_modulus = 1e9;
  /// ILT modulus = wall_modulus / compliance_ratio.
  double compliance_ratio = 20.0;
  double poisson = 0.49;

  void validate() const;
  /// Young's modulus of a region, MPa.
  double modulus_mpa(meshing::Region r) const;
};

struct LoadCase {
  double map_pressure = 13.0;  // kPa
  bool include_ilt = true;
};

/// Symmetric tensor in Voigt order xx yy zz xy yz xz.
using SymTensor = std::array<double, 6>;

Eigen::Matrix3d to_matrix(const SymTensor& s);

/// Largest eigenvalue of a symmetric 3x3 matrix (closed-form trigonometric
/// solution of the characteristic cubic). Throws for non-symmetric input.
double max_principal(const Eigen::Matrix3d& m);
double max_principal(const SymTensor& s);
/// All three eigenvalues, descending.
std::array<double, 3> principal_values(const SymTensor& s);

/// 6x6 isotropic Hooke matrix with engineering shear strains.
Eigen::Matrix<double, 6, 6> hooke_matrix(double modulus, double poisson);

/// 30x30 stiffness of a straight-sided quadratic tetrahedron (4-point Gauss).
/// DOF order: node-major, x y z per node, nodes in Tet10 order.
Eigen::Matrix<double, 30, 30> element_stiffness(const std::array<Vec3, 10>& x, double modulus, double poisson);

struct CoarseSpace;

/// Stiffness over 3*nodes DOFs (DOF 3n+c is component c of node n). Only the
/// lower triangle is stored.
struct LinearSystem {
  Eigen::SparseMatrix<double> lower;
  /// Full DOF -> row of `lower`, or -1 if constrained. Empty before
  /// constraints are applied (identity map).
  std::vector<int> dof_map;
  int full_size = 0;
  /// Optional coarse level for the multigrid preconditioner.
  std::shared_ptr<const CoarseSpace> coarse;

  int size() const { return static_cast<int>(lower.rows()); }
};

/// Linear (corner-node) level of a quadratic mesh. Corner DOFs inject,
/// mid-edge DOFs interpolate half from each end.
struct CoarseSpace {
  /// Free fine DOFs x free coarse DOFs.
  Eigen::SparseMatrix<double> prolongation;
  /// Linear-element stiffness of the corner nodes with the same moduli and
  /// constraints as the fine system. Lower triangle.
  Eigen::SparseMatrix<double> lower;
};

/// Moduli are taken relative to the wall modulus, so the assembled matrix
/// depends only on geometry, the compliance ratio and Poisson's ratio. Pass
/// the result through `scale` (or use run_case) to get physical units.
struct Assembly {
  LinearSystem system;
  /// Physical stiffness = scale * system.lower.
  double scale = 1.0;
};

Assembly assemble(const meshing::TetMesh& mesh, const MaterialSpec& mat);

/// Fixes all components of the given nodes to zero by dropping their rows
/// and columns. Throws when both sets are empty.
LinearSystem apply_constraints(const LinearSystem& system, const std::vector<int>& top,
                               const std::vector<int>& bottom);

/// Coarse level matching a constrained system from assemble() and
/// apply_constraints() on the same mesh and material.
std::shared_ptr<const CoarseSpace> linear_coarse_space(const meshing::TetMesh& mesh, const MaterialSpec& mat,
                                                       const LinearSystem& constrained);

/// Consistent nodal forces (N) of pressure p (kPa) acting against the
/// outward normal of each face. Length 3*nodes.
Eigen::VectorXd apply_pressure(const meshing::TetMesh& mesh, const std::vector<meshing::FaceRef>& faces,
                               double pressure_kpa);

/// Multigrid: one symmetric V-cycle over the system's coarse space, with
/// Chebyshev-accelerated Jacobi smoothing and a direct coarse solve.
/// Auto: Cholesky below kDirectSolveLimit unknowns or without a coarse
/// space, Multigrid otherwise.
enum class Preconditioner { Auto, Jacobi, Cholesky, Multigrid };

inline constexpr int kDirectSolveLimit = 150000;

struct SolverOptions {
  Preconditioner preconditioner = Preconditioner::Auto;
  double tolerance = 1e-9;
  int max_iterations = 20000;
};

struct SolveReport {
  int iterations = 0;
  double relative_residual = 0.0;
  std::vector<double> residual_history;
  /// Preconditioner actually used, with its factorisation backend.
  std::string backend;
  double setup_seconds = 0.0;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> history)
      : Error(what), history_(std::move(history)) {}
  const std::vector<double>& history() const noexcept { return history_; }

 private:
  std::vector<double> history_;
};

/// Preconditioned conjugate gradients on the constrained system. `load` and
/// the result are full-length; constrained entries of the result are zero.
Eigen::VectorXd solve(const LinearSystem& system, const Eigen::VectorXd& load, const SolverOptions& options = {},
                      SolveReport* report = nullptr);

/// True when the Cholesky backend factors and solves a dense 400x400 SPD
/// probe correctly. Broken BLAS kernels show up here. The result is cached.
bool cholesky_backend_healthy();

/// For executables: if the probe fails and OPENBLAS_CORETYPE is unset,
/// sets it to a conservative kernel family for this CPU and re-executes the
/// program with the same arguments. Returns normally otherwise; the solver
/// then falls back to a BLAS-free factorisation with a warning.
void ensure_reliable_blas(char** argv);

/// Full-length K*u computed element by element (physical units).
Eigen::VectorXd internal_forces(const meshing::TetMesh& mesh, const MaterialSpec& mat, const Eigen::VectorXd& u);

enum class StressKind { Raw, UshAveraged };

struct StressField {
  std::vector<SymTensor> tensor;  // MPa
  std::vector<double> max_principal;
  StressKind kind = StressKind::Raw;
};

/// Gauss-point stresses extrapolated to the corners and averaged over the
/// elements of one region, weighted by element volume. Nodes touching the
/// wall take the wall average. Mid-edge nodes take the mean of their two
/// corners, using the same region's averages.
StressField recover_stress(const meshing::TetMesh& mesh, const Eigen::VectorXd& u, const MaterialSpec& mat);

/// Replaces the tensors along each wall node column by their
/// trapezoid-weighted mean over the thickness. Wall mid-edge nodes off the
/// columns take the mean of their ends; ILT-only nodes are untouched.
StressField ush_average(const StressField& field, const meshing::TetMesh& mesh);

struct CaseResult {
  /// The analysed mesh (ILT removed when include_ilt is false).
  meshing::TetMesh mesh;
  Eigen::VectorXd displacement;  // mm, 3 per node
  StressField raw;
  std::optional<StressField> ush;
  /// Sum of reaction forces over the constrained nodes and of the applied
  /// pressure load (N).
  Vec3 reaction_total = Vec3::Zero();
  Vec3 applied_total = Vec3::Zero();
  /// Sum of the nodal load magnitudes, a scale for the two totals above.
  double applied_magnitude = 0.0;
  double strain_energy = 0.0;  // 0.5 u.K.u, N*mm
  double external_work = 0.0;  // 0.5 u.f
  SolveReport report;
};

/// assemble -> constrain TOP/BOTTOM -> pressure on LUMINAL -> solve ->
/// recover -> USH (when the mesh has node columns).
CaseResult run_case(const meshing::TetMesh& mesh, const MaterialSpec& mat, const LoadCase& load,
                    const SolverOptions& options = {});

/// Wall nodes (touched by at least one wall element).
std::vector<char> wall_nodes(const meshing::TetMesh& mesh);

}  // namespace aaa::solver
