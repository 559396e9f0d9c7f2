#pragma once

// Time-integration residuals. Every stage solves for a velocity V with
//
//   r(V) = W [ M (V - a) - e - c_nc f_nc(q_b + c_q V, V) - c_cf f_cf(q_b + c_q V, V) ]
//
// where f_nc collects elastic, damping, volume and gravity forces, f_cf
// contact and friction, and W is I (implicit residuals) or M^-1 (lagged
// residuals). Rows of Dirichlet dofs are replaced by V - v_prescribed.
//
// Scheme coefficients:
//   be      a = v_n, e = 0, q_b = q_n, c = c_q = h
//   tr      a = v_n, e = h/2 f(q_n, v_n), q_b = q_n + h/2 v_n, c = c_q = h/2
//   bdf2    a = 4/3 v_n - 1/3 v_{n-1}, q_b = 4/3 q_n - 1/3 q_{n-1}, c = c_q = 2h/3
//   trbdf2  gamma = 2 - sqrt(2); tr stage to t + gamma h, then
//           q = w1 q_gamma - w0 q_n + c2 h V with w1 = 1/(gamma (2 - gamma)),
//           w0 = (1 - gamma)^2 / (gamma (2 - gamma)), c2 = (1 - gamma) / (2 - gamma)
//   sdirk2  gamma = 1 - 1/sqrt(2); Q1 = q_n + gamma h V1,
//           Q2 = q_n + (1 - gamma) h V1 + gamma h V2, second stage explicit part
//           e = (1 - gamma)/gamma M (V1 - v_n)
// The first bdf2 step falls back to be.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fricsim/forces.hpp"
#include "fricsim/friction.hpp"
#include "fricsim/mesh.hpp"
#include "fricsim/solvers.hpp"

namespace fricsim {

enum class Scheme {
  BE,
  TR,
  /// TR split applied to non-contact forces only; contact and friction at full
  /// weight in the implicit part.
  TRDecoupled,
  /// TR with contact and friction only in the explicit part.
  TRExplicitContact,
  BDF2,
  TRBDF2,
  SDIRK2,
};

Scheme parse_scheme(const std::string& text);
std::string to_string(Scheme scheme);

/// Prescribed velocities on a subset of degrees of freedom.
struct DirichletConstraint {
  std::vector<int> dofs;
  Eigen::VectorXd velocity;  // full length; only entries at `dofs` are used

  bool empty() const { return dofs.empty(); }
};

/// Coefficients of one stage residual.
struct StageCoefficients {
  Eigen::VectorXd a;
  Eigen::VectorXd e;
  Eigen::VectorXd q_base;
  double c_nc = 0.0;
  double c_cf = 0.0;
  double c_q = 0.0;
  double time = 0.0;  // obstacle time of the implicit forces
};

/// One stage residual r(V) with exact JVPs and an assembled Jacobian.
class ResidualProblem : public NonlinearSystem {
 public:
  ResidualProblem(const ForceModel& forces, StageCoefficients stage, std::vector<ContactPoint> contacts,
                  std::optional<Eigen::VectorXd> lagged_positions, bool scale_by_inverse_mass,
                  JacobianDetail detail, DirichletConstraint dirichlet);

  int size() const override { return static_cast<int>(forces_->mass().size()); }

  /// Generic evaluation; false when the state is infeasible.
  template <class T>
  bool evaluate(const Vec<T>& V, Vec<T>& r) const {
    const Vec<T> q = positions<T>(V);
    Vec<T> f_nc = Vec<T>::Zero(V.size());
    if (!forces_->add_non_contact<T>(q, V, f_nc)) return false;
    Vec<T> f_cf = Vec<T>::Zero(V.size());
    if (stage_.c_cf != 0.0) forces_->add_contact<T>(contacts_, q, V, stage_.time, source(), f_cf);
    const Eigen::VectorXd& M = forces_->mass();
    r = M.cast<T>().cwiseProduct(V - stage_.a.cast<T>()) - stage_.e.cast<T>() - stage_.c_nc * f_nc -
        stage_.c_cf * f_cf;
    if (scale_by_inverse_mass_) r = r.cwiseQuotient(M.cast<T>());
    for (int dof : dirichlet_.dofs) r[dof] = V[dof] - dirichlet_.velocity[dof];
    return true;
  }

  template <class T>
  Vec<T> positions(const Vec<T>& V) const {
    return stage_.q_base.cast<T>() + stage_.c_q * V;
  }

  Eigen::VectorXd residual(const Eigen::VectorXd& V) const override;
  Eigen::VectorXd jvp(const Eigen::VectorXd& V, const Eigen::VectorXd& p) const override;
  JacobianMatrix jacobian(const Eigen::VectorXd& V) const override;

  const StageCoefficients& stage() const { return stage_; }
  const std::vector<ContactPoint>& contacts() const { return contacts_; }

 private:
  FrictionSource source() const {
    return {lagged_ ? &*lagged_ : nullptr, detail_ == JacobianDetail::FrozenBasis};
  }

  const ForceModel* forces_;
  StageCoefficients stage_;
  std::vector<ContactPoint> contacts_;
  std::optional<Eigen::VectorXd> lagged_;
  bool scale_by_inverse_mass_ = false;
  JacobianDetail detail_ = JacobianDetail::WithSlidingBasisDerivatives;
  DirichletConstraint dirichlet_;
};

struct IntegratorConfig {
  Scheme scheme = Scheme::BE;
  FrictionMode friction;
  double h = 0.01;

  /// Throws Error(Config) for unsupported combinations (lagged friction with
  /// schemes other than be and tr).
  void validate() const;
};

/// Solves one stage; returns the stage velocity and its report.
using StageSolver = std::function<SolveResult(const ResidualProblem&, const Eigen::VectorXd& guess)>;

struct StepOutcome {
  SystemState state;
  std::vector<SolveReport> reports;
  bool converged = true;
};

/// Advance `current` by one step with a frozen contact list. `previous` is
/// the state one step earlier (used by bdf2). Stops at the first
/// non-converged stage and reports it.
StepOutcome integrate_step(const ForceModel& forces, const IntegratorConfig& cfg, const SystemState& current,
                           const std::optional<SystemState>& previous, const std::vector<ContactPoint>& contacts,
                           const DirichletConstraint& dirichlet, const StageSolver& solver);

}  // namespace fricsim
