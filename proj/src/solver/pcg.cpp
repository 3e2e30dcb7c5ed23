#include "aaa/solver.hpp"

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <random>
#include <sstream>

#include <Eigen/SparseCholesky>
#ifdef AAA_HAVE_CHOLMOD
#include <Eigen/CholmodSupport>
#endif

namespace aaa::solver {
namespace {

using SpMat = Eigen::SparseMatrix<double>;

class PreconditionerOp {
 public:
  virtual ~PreconditionerOp() = default;
  virtual Eigen::VectorXd apply(const Eigen::VectorXd& r) const = 0;
  virtual std::string name() const = 0;
};

class JacobiPreconditioner : public PreconditionerOp {
 public:
  explicit JacobiPreconditioner(const SpMat& lower) : inv_(lower.rows()) {
    for (int j = 0; j < lower.outerSize(); ++j) {
      double d = 0.0;
      for (SpMat::InnerIterator it(lower, j); it; ++it)
        if (it.row() == j) d = it.value();
      if (!(d > 0.0)) throw Error("solve: non-positive diagonal entry; matrix is not positive definite");
      inv_[j] = 1.0 / d;
    }
  }
  Eigen::VectorXd apply(const Eigen::VectorXd& r) const override { return inv_.cwiseProduct(r); }
  std::string name() const override { return "jacobi"; }

 private:
  Eigen::VectorXd inv_;
};

class CholeskyPreconditioner : public PreconditionerOp {
 public:
  explicit CholeskyPreconditioner(const SpMat& lower) {
#ifdef AAA_HAVE_CHOLMOD
    if (cholesky_backend_healthy()) {
      auto& common = cholmod_.cholmod();
      common.print = 0;
      // Eigen does not check the symbolic step; a failed analysis leaves no
      // factor to work on.
      cholmod_.analyzePattern(lower);
      if (common.status < 0) throw Error("solve: Cholesky analysis failed (CHOLMOD status " + std::to_string(common.status) + ")");
      check_memory(common.lnz);
      cholmod_.factorize(lower);
      if (common.status < 0) throw Error("solve: Cholesky factorisation failed (CHOLMOD status " + std::to_string(common.status) + ")");
      check(cholmod_.info());
      use_cholmod_ = true;
      return;
    }
    static const bool warned = [] {
      warn("CHOLMOD failed its self-test (faulty BLAS kernels?); using the slower built-in LDLT factorisation");
      return true;
    }();
    (void)warned;
#endif
    ldlt_.compute(lower);
    check(ldlt_.info());
  }
  Eigen::VectorXd apply(const Eigen::VectorXd& r) const override {
#ifdef AAA_HAVE_CHOLMOD
    if (use_cholmod_) return cholmod_.solve(r);
#endif
    return ldlt_.solve(r);
  }
  std::string name() const override { return use_cholmod_ ? "cholmod-supernodal" : "eigen-simplicial-ldlt"; }

 private:
  static void check(Eigen::ComputationInfo info) {
    if (info != Eigen::Success) throw Error("solve: Cholesky factorisation failed; matrix is not positive definite");
  }
  // Refuse factors that would not fit in memory rather than being killed.
  static void check_memory(double lnz) {
    const double physical = static_cast<double>(sysconf(_SC_PHYS_PAGES)) * static_cast<double>(sysconf(_SC_PAGESIZE));
    const double need = 8.0 * lnz;
    if (physical > 0.0 && need > 0.6 * physical) {
      std::ostringstream msg;
      msg << "solve: the Cholesky factor needs about " << need / 1e9 << " GB of " << physical / 1e9
          << " GB installed; use the multigrid preconditioner";
      throw Error(msg.str());
    }
  }
  bool use_cholmod_ = false;
  Eigen::SimplicialLDLT<SpMat, Eigen::Lower> ldlt_;
#ifdef AAA_HAVE_CHOLMOD
  Eigen::CholmodSupernodalLLT<SpMat, Eigen::Lower> cholmod_;
#endif
};

class MultigridPreconditioner : public PreconditionerOp {
 public:
  MultigridPreconditioner(const SpMat& lower, const CoarseSpace& coarse)
      : k_(lower), p_(coarse.prolongation), coarse_(coarse.lower) {
    if (p_.rows() != lower.rows()) throw Error("solve: coarse space does not match the system");
    inv_diag_ = lower.diagonal();
    for (Eigen::Index i = 0; i < inv_diag_.size(); ++i) {
      if (!(inv_diag_[i] > 0.0)) throw Error("solve: non-positive diagonal entry; matrix is not positive definite");
      inv_diag_[i] = 1.0 / inv_diag_[i];
    }
    // Largest eigenvalue of D^-1 K by power iteration from a fixed start.
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Eigen::VectorXd v(lower.rows()), w(lower.rows());
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = dist(rng);
    v.normalize();
    double lambda = 1.0;
    for (int it = 0; it < 20; ++it) {
      w.noalias() = k() * v;
      w = inv_diag_.cwiseProduct(w);
      lambda = w.norm();
      v = w / lambda;
    }
    hi_ = 1.1 * lambda;
    lo_ = 0.1 * hi_;
  }

  Eigen::VectorXd apply(const Eigen::VectorXd& r) const override {
    Eigen::VectorXd x = smooth(r);
    Eigen::VectorXd res = r - k() * x;
    x += p_ * coarse_.apply(p_.transpose() * res);
    res = r - k() * x;
    x += smooth(res);
    return x;
  }
  std::string name() const override { return "multigrid(coarse " + coarse_.name() + ")"; }

 private:
  Eigen::SparseSelfAdjointView<const SpMat, Eigen::Lower> k() const { return k_.selfadjointView<Eigen::Lower>(); }

  // Chebyshev polynomial in D^-1 K applied to r, starting from zero.
  Eigen::VectorXd smooth(const Eigen::VectorXd& r) const {
    constexpr int kDegree = 3;
    const double theta = 0.5 * (hi_ + lo_), delta = 0.5 * (hi_ - lo_), sigma = theta / delta;
    double rho = 1.0 / sigma;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(r.size());
    Eigen::VectorXd res = r;
    Eigen::VectorXd d = inv_diag_.cwiseProduct(res) / theta;
    for (int i = 0; i < kDegree; ++i) {
      x += d;
      if (i + 1 == kDegree) break;
      res.noalias() -= k() * d;
      const double rho_next = 1.0 / (2.0 * sigma - rho);
      d = (rho_next * rho) * d + (2.0 * rho_next / delta) * inv_diag_.cwiseProduct(res);
      rho = rho_next;
    }
    return x;
  }

  const SpMat& k_;
  const SpMat& p_;
  CholeskyPreconditioner coarse_;
  Eigen::VectorXd inv_diag_;
  double lo_ = 0.0, hi_ = 1.0;
};

}  // namespace

bool cholesky_backend_healthy() {
#ifdef AAA_HAVE_CHOLMOD
  static const bool healthy = [] {
    // Dense enough to send CHOLMOD through its BLAS/LAPACK supernodal path.
    const int n = 400;
    std::mt19937 rng(12345);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Eigen::MatrixXd b(n, n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) b(i, j) = dist(rng);
    Eigen::MatrixXd a = b * b.transpose() + n * Eigen::MatrixXd::Identity(n, n);
    const SpMat lower = Eigen::MatrixXd(a.triangularView<Eigen::Lower>()).sparseView();
    Eigen::CholmodSupernodalLLT<SpMat, Eigen::Lower> llt;
    llt.cholmod().print = 0;
    llt.compute(lower);
    if (llt.info() != Eigen::Success) return false;
    const Eigen::VectorXd x = llt.solve(a * Eigen::VectorXd::Ones(n));
    return (x - Eigen::VectorXd::Ones(n)).lpNorm<Eigen::Infinity>() < 1e-8;
  }();
  return healthy;
#else
  return true;
#endif
}

void ensure_reliable_blas(char** argv) {
#ifdef AAA_HAVE_CHOLMOD
  if (cholesky_backend_healthy() || std::getenv("OPENBLAS_CORETYPE")) return;
  __builtin_cpu_init();
  const char* core = __builtin_cpu_supports("avx2")  ? "Haswell"
                     : __builtin_cpu_supports("avx") ? "Sandybridge"
                                                     : "Nehalem";
  setenv("OPENBLAS_CORETYPE", core, 1);
  execv("/proc/self/exe", argv);
#else
  (void)argv;
#endif
}

Eigen::VectorXd solve(const LinearSystem& system, const Eigen::VectorXd& load, const SolverOptions& options,
                      SolveReport* report) {
  if (load.size() != system.full_size) throw Error("solve: load vector size does not match the system");
  if (!(options.tolerance > 0.0) || options.max_iterations < 1) throw Error("solve: invalid solver options");
  const bool constrained = !system.dof_map.empty();
  const int n = system.size();

  Eigen::VectorXd b(n);
  if (constrained) {
    for (int i = 0; i < system.full_size; ++i)
      if (system.dof_map[i] >= 0) b[system.dof_map[i]] = load[i];
  } else {
    b = load;
  }

  SolveReport rep;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  const double bnorm = b.norm();
  if (n > 0 && bnorm > 0.0) {
    const auto start = std::chrono::steady_clock::now();
    auto kind = options.preconditioner;
    if (kind == Preconditioner::Auto)
      kind = system.coarse && n > kDirectSolveLimit ? Preconditioner::Multigrid : Preconditioner::Cholesky;
    std::unique_ptr<PreconditionerOp> m;
    switch (kind) {
      case Preconditioner::Jacobi:
        m = std::make_unique<JacobiPreconditioner>(system.lower);
        break;
      case Preconditioner::Multigrid:
        if (!system.coarse) throw Error("solve: the multigrid preconditioner needs a coarse space");
        m = std::make_unique<MultigridPreconditioner>(system.lower, *system.coarse);
        break;
      default:
        m = std::make_unique<CholeskyPreconditioner>(system.lower);
    }
    rep.backend = m->name();
    rep.setup_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const auto k = system.lower.selfadjointView<Eigen::Lower>();
    Eigen::VectorXd r = b;
    Eigen::VectorXd z = m->apply(r);
    Eigen::VectorXd p = z;
    Eigen::VectorXd q(n);
    double rz = r.dot(z);
    bool converged = false;
    for (int it = 1; it <= options.max_iterations; ++it) {
      q.noalias() = k * p;
      const double pq = p.dot(q);
      if (!(pq > 0.0)) throw ConvergenceError("solve: matrix is not positive definite (p.Kp <= 0)", rep.residual_history);
      const double alpha = rz / pq;
      x += alpha * p;
      r -= alpha * q;
      const double rel = r.norm() / bnorm;
      rep.residual_history.push_back(rel);
      rep.iterations = it;
      rep.relative_residual = rel;
      if (rel <= options.tolerance) {
        converged = true;
        break;
      }
      z = m->apply(r);
      const double rz_next = r.dot(z);
      p = z + (rz_next / rz) * p;
      rz = rz_next;
    }
    if (!converged) {
      std::ostringstream msg;
      msg << "solve: no convergence in " << options.max_iterations << " iterations; relative residual "
          << rep.relative_residual << " > " << options.tolerance << "; history tail:";
      const auto& h = rep.residual_history;
      for (std::size_t k2 = h.size() > 5 ? h.size() - 5 : 0; k2 < h.size(); ++k2) msg << ' ' << h[k2];
      throw ConvergenceError(msg.str(), rep.residual_history);
    }
  }
  if (report) *report = std::move(rep);

  if (!constrained) return x;
  Eigen::VectorXd full = Eigen::VectorXd::Zero(system.full_size);
  for (int i = 0; i < system.full_size; ++i)
    if (system.dof_map[i] >= 0) full[i] = x[system.dof_map[i]];
  return full;
}

}  // namespace aaa::solver
