#pragma once

// Damped Newton (direct sparse LU) and inexact damped Newton (matrix-free
// BiCGSTAB with adaptive forcing terms) for square nonlinear systems r(v) = 0.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "fricsim/volume.hpp"

namespace fricsim {

/// Sparse matrix plus rank-one corrections.
struct JacobianMatrix {
  Eigen::SparseMatrix<double> sparse;
  std::vector<RankOneTerm> rank_one;

  Eigen::VectorXd apply(const Eigen::VectorXd& p) const;
};

/// A square nonlinear system. residual() returns a vector containing +inf
/// when v is infeasible (for example an inverted element).
class NonlinearSystem {
 public:
  virtual ~NonlinearSystem() = default;
  virtual int size() const = 0;
  virtual Eigen::VectorXd residual(const Eigen::VectorXd& v) const = 0;
  /// Exact J(v) p.
  virtual Eigen::VectorXd jvp(const Eigen::VectorXd& v, const Eigen::VectorXd& p) const = 0;
  /// Assembled Jacobian used by the direct path.
  virtual JacobianMatrix jacobian(const Eigen::VectorXd& v) const = 0;
};

enum class LinearSolver { DirectLU, BiCGSTAB };

struct SolverConfig {
  LinearSolver linear = LinearSolver::DirectLU;
  int max_iterations = 50;
  double r_tol_abs = 1e-10;
  double r_tol_rel = 1e-6;
  double v_tol = 1e-5;
  double c1 = 1e-4;
  double sigma = 0.01;
  double backtrack = 0.5;
  double phi = 1.6180339887498949;
  double min_step = 1e-12;
  int max_krylov_iterations = 500;
  /// Direct path: include rank-one Jacobian terms through Sherman-Morrison-Woodbury.
  bool exact_low_rank = false;

  void validate() const;
};

enum class SolveStatus { Converged, MaxIters, LineSearchFailed, LinearSolveFailed };

std::string to_string(SolveStatus status);
std::string to_string(LinearSolver solver);
LinearSolver parse_linear_solver(const std::string& text);

struct SolveReport {
  int iterations = 0;
  std::vector<double> residual_norms;   // infinity norm per iterate, starting with r(v0)
  std::vector<double> residual_l2_norms;  // Euclidean norm per iterate (inexact path; drives sigma_k)
  std::vector<double> step_sizes;       // accepted alpha per iteration
  std::vector<int> linear_iterations;   // Krylov iterations (1 for direct solves)
  std::vector<double> forcing_terms;    // sigma_k per iteration (0 for direct)
  std::vector<double> forcing_updates;  // 1 - alpha (1 - sigma_k), recorded only
  int kappa_bumps = 0;
  int steepest_descent_fallbacks = 0;
  SolveStatus status = SolveStatus::MaxIters;
  std::string message;

  bool converged() const { return status == SolveStatus::Converged; }
  std::string summary() const;
};

struct SolveResult {
  Eigen::VectorXd v;
  SolveReport report;
};

/// ||r||_inf <= max(r_tol_abs, r_tol_rel ||r_0||_inf) or ||v_k - v_prev||_inf <= v_tol.
bool should_stop(const Eigen::VectorXd& r, double initial_residual_norm, const Eigen::VectorXd& v_k,
                 const Eigen::VectorXd& v_prev, const SolverConfig& cfg);

SolveResult damped_newton(const NonlinearSystem& system, const Eigen::VectorXd& v0, const SolverConfig& cfg);
SolveResult inexact_damped_newton(const NonlinearSystem& system, const Eigen::VectorXd& v0,
                                  const SolverConfig& cfg);
/// Dispatch on cfg.linear.
SolveResult solve(const NonlinearSystem& system, const Eigen::VectorXd& v0, const SolverConfig& cfg);

struct KrylovResult {
  Eigen::VectorXd x;
  int iterations = 0;
  bool converged = false;
  bool restarted = false;
  double relative_residual = 0.0;
};

using LinearOperator = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// BiCGSTAB for J x = b from x = 0. On breakdown restarts once from the
/// current iterate with a shadow residual drawn from a fixed-seed generator.
KrylovResult bicgstab(const LinearOperator& apply, const Eigen::VectorXd& b, double tol, int max_iters,
                      std::uint32_t seed = 5489u);

}  // namespace fricsim
