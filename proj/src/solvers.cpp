#include "fricsim/solvers.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <Eigen/SparseLU>

#include "fricsim/error.hpp"

namespace fricsim {
namespace {

double norm_or_inf(const Eigen::VectorXd& r) {
  return r.allFinite() ? r.norm() : std::numeric_limits<double>::infinity();
}

double inf_norm(const Eigen::VectorXd& r) {
  if (!r.allFinite()) return std::numeric_limits<double>::infinity();
  return r.size() ? r.cwiseAbs().maxCoeff() : 0.0;
}

bool residual_small(const Eigen::VectorXd& r, double initial_residual_norm, const SolverConfig& cfg) {
  return inf_norm(r) <= std::max(cfg.r_tol_abs, cfg.r_tol_rel * initial_residual_norm);
}

struct LineSearchOutcome {
  bool accepted = false;
  double alpha = 1.0;
  Eigen::VectorXd v;
  Eigen::VectorXd r;
};

/// Backtrack until ||r(v + alpha p)|| <= (1 - c1 alpha (1 - sigma)) ||r(v)||.
LineSearchOutcome backtrack(const NonlinearSystem& system, const Eigen::VectorXd& v, const Eigen::VectorXd& p,
                            double residual_norm, double sigma, const SolverConfig& cfg) {
  LineSearchOutcome out;
  double alpha = 1.0;
  while (alpha >= cfg.min_step) {
    Eigen::VectorXd trial = v + alpha * p;
    Eigen::VectorXd r = system.residual(trial);
    if (norm_or_inf(r) <= (1.0 - cfg.c1 * alpha * (1.0 - sigma)) * residual_norm) {
      out.accepted = true;
      out.alpha = alpha;
      out.v = std::move(trial);
      out.r = std::move(r);
      return out;
    }
    alpha *= cfg.backtrack;
  }
  out.alpha = alpha;
  return out;
}

/// Solve (S + sum c_k l_k r_k^T) x = b given an LU factorization of S.
Eigen::VectorXd woodbury_solve(const Eigen::SparseLU<Eigen::SparseMatrix<double>>& lu,
                               const std::vector<RankOneTerm>& terms, const Eigen::VectorXd& b) {
  Eigen::VectorXd y = lu.solve(b);
  if (terms.empty()) return y;
  const int m = static_cast<int>(terms.size());
  Eigen::MatrixXd Z(b.size(), m);
  for (int k = 0; k < m; ++k) Z.col(k) = lu.solve(terms[k].left);
  Eigen::MatrixXd cap = Eigen::MatrixXd::Identity(m, m);
  Eigen::VectorXd rhs(m);
  for (int k = 0; k < m; ++k) {
    for (int j = 0; j < m; ++j) cap(k, j) += terms[k].coefficient * terms[k].right.dot(Z.col(j));
    rhs[k] = terms[k].coefficient * terms[k].right.dot(y);
  }
  return y - Z * cap.partialPivLu().solve(rhs);
}

SolveResult fail_initial(const Eigen::VectorXd& v0, SolveReport report) {
  report.status = SolveStatus::LineSearchFailed;
  report.message = "initial residual is not finite";
  return {v0, std::move(report)};
}

}  // namespace

Eigen::VectorXd JacobianMatrix::apply(const Eigen::VectorXd& p) const {
  Eigen::VectorXd out = sparse * p;
  for (const auto& term : rank_one) out += term.apply(p);
  return out;
}

void SolverConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw Error(ErrorCategory::Domain, "solver." + field + ": " + why);
  };
  if (max_iterations < 1) fail("max_iterations", "must be >= 1");
  if (!(r_tol_abs > 0.0)) fail("r_tol_abs", "must be > 0");
  if (!(r_tol_rel > 0.0)) fail("r_tol_rel", "must be > 0");
  if (!(v_tol > 0.0)) fail("v_tol", "must be > 0");
  if (!(c1 > 0.0 && c1 < 1.0)) fail("c1", "must lie in (0, 1)");
  if (!(sigma > 0.0 && sigma < 1.0)) fail("sigma", "must lie in (0, 1)");
  if (!(backtrack > 0.0 && backtrack < 1.0)) fail("backtrack", "must lie in (0, 1)");
  if (max_krylov_iterations < 1) fail("max_krylov_iterations", "must be >= 1");
}

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Converged: return "Converged";
    case SolveStatus::MaxIters: return "MaxIters";
    case SolveStatus::LineSearchFailed: return "LineSearchFailed";
    case SolveStatus::LinearSolveFailed: return "LinearSolveFailed";
  }
  return "Unknown";
}

std::string to_string(LinearSolver solver) {
  return solver == LinearSolver::DirectLU ? "direct" : "iterative";
}

LinearSolver parse_linear_solver(const std::string& text) {
  if (text == "direct") return LinearSolver::DirectLU;
  if (text == "iterative") return LinearSolver::BiCGSTAB;
  throw Error(ErrorCategory::Config, "solver: expected \"direct\" or \"iterative\", got \"" + text + "\"");
}

std::string SolveReport::summary() const {
  std::ostringstream out;
  out.precision(6);
  out << "status=" << to_string(status) << " iterations=" << iterations;
  if (!residual_norms.empty())
    out << " |r0|=" << residual_norms.front() << " |r|=" << residual_norms.back();
  if (!step_sizes.empty()) out << " last_alpha=" << step_sizes.back();
  if (!message.empty()) out << " (" << message << ")";
  return out.str();
}

bool should_stop(const Eigen::VectorXd& r, double initial_residual_norm, const Eigen::VectorXd& v_k,
                 const Eigen::VectorXd& v_prev, const SolverConfig& cfg) {
  if (residual_small(r, initial_residual_norm, cfg)) return true;
  return inf_norm(v_k - v_prev) <= cfg.v_tol;
}

SolveResult damped_newton(const NonlinearSystem& system, const Eigen::VectorXd& v0, const SolverConfig& cfg) {
  SolveReport report;
  Eigen::VectorXd v = v0;
  Eigen::VectorXd r = system.residual(v);
  report.residual_norms.push_back(inf_norm(r));
  if (!r.allFinite()) return fail_initial(v0, std::move(report));
  const double r0 = inf_norm(r);
  if (residual_small(r, r0, cfg)) {
    report.status = SolveStatus::Converged;
    return {v, std::move(report)};
  }
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  for (int k = 0; k < cfg.max_iterations; ++k) {
    JacobianMatrix J = system.jacobian(v);
    J.sparse.makeCompressed();
    lu.compute(J.sparse);
    if (lu.info() != Eigen::Success) {
      report.status = SolveStatus::LinearSolveFailed;
      report.message = "singular Jacobian factorization; reduce the time step";
      return {v, std::move(report)};
    }
    const std::vector<RankOneTerm> no_terms;
    const Eigen::VectorXd p = -woodbury_solve(lu, cfg.exact_low_rank ? J.rank_one : no_terms, r);
    if (!p.allFinite()) {
      report.status = SolveStatus::LinearSolveFailed;
      report.message = "non-finite Newton direction; reduce the time step";
      return {v, std::move(report)};
    }
    LineSearchOutcome ls = backtrack(system, v, p, r.norm(), 0.0, cfg);
    report.linear_iterations.push_back(1);
    report.forcing_terms.push_back(0.0);
    if (!ls.accepted) {
      report.status = SolveStatus::LineSearchFailed;
      report.message = "step size fell below minimum";
      return {v, std::move(report)};
    }
    const Eigen::VectorXd v_prev = v;
    v = std::move(ls.v);
    r = std::move(ls.r);
    report.iterations = k + 1;
    report.step_sizes.push_back(ls.alpha);
    report.forcing_updates.push_back(1.0 - ls.alpha);
    report.residual_norms.push_back(inf_norm(r));
    if (should_stop(r, r0, v, v_prev, cfg)) {
      report.status = SolveStatus::Converged;
      return {v, std::move(report)};
    }
  }
  report.status = SolveStatus::MaxIters;
  return {v, std::move(report)};
}

SolveResult inexact_damped_newton(const NonlinearSystem& system, const Eigen::VectorXd& v0,
                                  const SolverConfig& cfg) {
  SolveReport report;
  Eigen::VectorXd v = v0;
  Eigen::VectorXd r = system.residual(v);
  report.residual_norms.push_back(inf_norm(r));
  if (!r.allFinite()) return fail_initial(v0, std::move(report));
  const double r0 = inf_norm(r);
  if (residual_small(r, r0, cfg)) {
    report.status = SolveStatus::Converged;
    return {v, std::move(report)};
  }
  report.residual_l2_norms.push_back(r.norm());
  double previous_norm = -1.0;
  for (int k = 0; k < cfg.max_iterations; ++k) {
    const double norm = r.norm();
    const double sigma_k =
        previous_norm > 0.0 ? std::min(std::pow(norm / previous_norm, cfg.phi), cfg.sigma) : cfg.sigma;
    report.forcing_terms.push_back(sigma_k);

    const LinearOperator apply = [&](const Eigen::VectorXd& p) { return system.jvp(v, p); };
    KrylovResult kr = bicgstab(apply, -r, sigma_k, cfg.max_krylov_iterations);
    report.linear_iterations.push_back(kr.iterations);

    LineSearchOutcome ls;
    if (kr.converged) {
      ls = backtrack(system, v, kr.x, norm, sigma_k, cfg);
      if (!ls.accepted) {
        report.status = SolveStatus::LineSearchFailed;
        report.message = "step size fell below minimum";
        return {v, std::move(report)};
      }
    } else {
      ++report.steepest_descent_fallbacks;
      ls = backtrack(system, v, -r, norm, sigma_k, cfg);
      if (!ls.accepted) {
        report.status = SolveStatus::LinearSolveFailed;
        report.message = "Krylov solver stagnated and the residual direction made no progress";
        return {v, std::move(report)};
      }
    }
    report.forcing_updates.push_back(1.0 - ls.alpha * (1.0 - sigma_k));
    const Eigen::VectorXd v_prev = v;
    previous_norm = norm;
    v = std::move(ls.v);
    r = std::move(ls.r);
    report.iterations = k + 1;
    report.step_sizes.push_back(ls.alpha);
    report.residual_norms.push_back(inf_norm(r));
    report.residual_l2_norms.push_back(r.norm());
    if (should_stop(r, r0, v, v_prev, cfg)) {
      report.status = SolveStatus::Converged;
      return {v, std::move(report)};
    }
  }
  report.status = SolveStatus::MaxIters;
  return {v, std::move(report)};
}

SolveResult solve(const NonlinearSystem& system, const Eigen::VectorXd& v0, const SolverConfig& cfg) {
  return cfg.linear == LinearSolver::DirectLU ? damped_newton(system, v0, cfg)
                                              : inexact_damped_newton(system, v0, cfg);
}

KrylovResult bicgstab(const LinearOperator& apply, const Eigen::VectorXd& b, double tol, int max_iters,
                      std::uint32_t seed) {
  KrylovResult out;
  const Eigen::Index n = b.size();
  out.x = Eigen::VectorXd::Zero(n);
  const double b_norm = b.norm();
  if (b_norm == 0.0) {
    out.converged = true;
    return out;
  }
  const double tiny = std::numeric_limits<double>::epsilon() * std::numeric_limits<double>::epsilon();
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);

  Eigen::VectorXd r = b;
  Eigen::VectorXd shadow = r;
  Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd Ap = Eigen::VectorXd::Zero(n);
  double rho = 1.0, alpha = 1.0, omega = 1.0;

  auto restart = [&]() {
    if (out.restarted) return false;
    out.restarted = true;
    r = b - apply(out.x);
    shadow = Eigen::VectorXd::NullaryExpr(n, [&]() { return dist(rng); });
    p.setZero();
    Ap.setZero();
    rho = alpha = omega = 1.0;
    return true;
  };

  while (out.iterations < max_iters) {
    ++out.iterations;
    const double rho_next = shadow.dot(r);
    if (std::abs(rho_next) <= tiny * shadow.norm() * r.norm() || !std::isfinite(rho_next)) {
      if (!restart()) break;
      continue;
    }
    const double beta = (rho_next / rho) * (alpha / omega);
    p = r + beta * (p - omega * Ap);
    Ap = apply(p);
    const double denom = shadow.dot(Ap);
    if (std::abs(denom) <= tiny * shadow.norm() * Ap.norm() || !std::isfinite(denom)) {
      if (!restart()) break;
      continue;
    }
    alpha = rho_next / denom;
    const Eigen::VectorXd s = r - alpha * Ap;
    if (s.norm() <= tol * b_norm) {
      out.x += alpha * p;
      out.converged = true;
      out.relative_residual = s.norm() / b_norm;
      return out;
    }
    const Eigen::VectorXd As = apply(s);
    const double as_sq = As.squaredNorm();
    if (!(as_sq > 0.0)) {
      if (!restart()) break;
      continue;
    }
    omega = As.dot(s) / as_sq;
    out.x += alpha * p + omega * s;
    r = s - omega * As;
    const double r_norm = r.norm();
    if (r_norm <= tol * b_norm) {
      out.converged = true;
      out.relative_residual = r_norm / b_norm;
      return out;
    }
    if (std::abs(omega) <= tiny || !std::isfinite(omega)) {
      if (!restart()) break;
      continue;
    }
    rho = rho_next;
  }
  out.relative_residual = (b - apply(out.x)).norm() / b_norm;
  out.converged = out.relative_residual <= tol;
  return out;
}

}  // namespace fricsim
