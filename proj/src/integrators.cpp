#include "fricsim/integrators.hpp"

#include <cmath>
#include <limits>

#include "fricsim/error.hpp"

namespace fricsim {
namespace {

Eigen::VectorXd explicit_force(const ForceModel& forces, const std::vector<ContactPoint>& contacts,
                               const SystemState& s, bool non_contact, bool contact) {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(s.q.size());
  if (non_contact && !forces.add_non_contact<double>(s.q, s.v, f))
    throw Error(ErrorCategory::Domain, "explicit force evaluation: infeasible step-start state");
  if (contact) forces.add_contact<double>(contacts, s.q, s.v, s.t, FrictionSource{}, f);
  return f;
}

bool problem_feasible(const ForceModel& forces, const StageCoefficients& stage, const Eigen::VectorXd& V) {
  const Eigen::VectorXd q = stage.q_base + stage.c_q * V;
  return std::isfinite(forces.elastic().energy(q));
}

}  // namespace

Scheme parse_scheme(const std::string& text) {
  if (text == "be") return Scheme::BE;
  if (text == "tr") return Scheme::TR;
  if (text == "tr_decoupled") return Scheme::TRDecoupled;
  if (text == "tr_explicit_contact") return Scheme::TRExplicitContact;
  if (text == "bdf2") return Scheme::BDF2;
  if (text == "trbdf2") return Scheme::TRBDF2;
  if (text == "sdirk2") return Scheme::SDIRK2;
  throw Error(ErrorCategory::Config,
              "integrator: expected be, tr, tr_decoupled, tr_explicit_contact, bdf2, trbdf2 or sdirk2, got \"" +
                  text + "\"");
}

std::string to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::BE: return "be";
    case Scheme::TR: return "tr";
    case Scheme::TRDecoupled: return "tr_decoupled";
    case Scheme::TRExplicitContact: return "tr_explicit_contact";
    case Scheme::BDF2: return "bdf2";
    case Scheme::TRBDF2: return "trbdf2";
    case Scheme::SDIRK2: return "sdirk2";
  }
  return "be";
}

void IntegratorConfig::validate() const {
  if (!(h > 0.0)) throw Error(ErrorCategory::Domain, "integrator.h: must be > 0");
  if (friction.lagged && scheme != Scheme::BE && scheme != Scheme::TR)
    throw Error(ErrorCategory::Config, "friction_mode: lagged friction is only defined for be and tr");
}

ResidualProblem::ResidualProblem(const ForceModel& forces, StageCoefficients stage,
                                 std::vector<ContactPoint> contacts, std::optional<Eigen::VectorXd> lagged_positions,
                                 bool scale_by_inverse_mass, JacobianDetail detail, DirichletConstraint dirichlet)
    : forces_(&forces),
      stage_(std::move(stage)),
      contacts_(std::move(contacts)),
      lagged_(std::move(lagged_positions)),
      scale_by_inverse_mass_(scale_by_inverse_mass),
      detail_(detail),
      dirichlet_(std::move(dirichlet)) {}

Eigen::VectorXd ResidualProblem::residual(const Eigen::VectorXd& V) const {
  Eigen::VectorXd r;
  if (!V.allFinite() || !evaluate<double>(V, r))
    return Eigen::VectorXd::Constant(V.size(), std::numeric_limits<double>::infinity());
  return r;
}

Eigen::VectorXd ResidualProblem::jvp(const Eigen::VectorXd& V, const Eigen::VectorXd& p) const {
  DualVec r;
  if (!evaluate<Dual>(make_dual(V, p), r))
    return Eigen::VectorXd::Constant(V.size(), std::numeric_limits<double>::quiet_NaN());
  return tangent_part(r);
}

JacobianMatrix ResidualProblem::jacobian(const Eigen::VectorXd& V) const {
  const int n = size();
  const Eigen::VectorXd q = positions<double>(V);
  const Eigen::VectorXd& M = forces_->mass();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(64 * n);
  JacobianMatrix J;
  for (int i = 0; i < n; ++i) trips.emplace_back(i, i, M[i]);
  if (!forces_->add_non_contact_jacobian(q, V, -stage_.c_nc * stage_.c_q, -stage_.c_nc, trips, &J.rank_one))
    throw Error(ErrorCategory::Domain, "jacobian: infeasible state");
  if (stage_.c_cf != 0.0)
    forces_->add_contact_jacobian(contacts_, q, V, stage_.time, source(), -stage_.c_cf * stage_.c_q,
                                  -stage_.c_cf, trips);

  std::vector<char> fixed(n, 0);
  for (int dof : dirichlet_.dofs) fixed[dof] = 1;
  std::vector<Eigen::Triplet<double>> kept;
  kept.reserve(trips.size());
  for (const auto& t : trips) {
    if (fixed[t.row()]) continue;
    const double value = scale_by_inverse_mass_ ? t.value() / M[t.row()] : t.value();
    kept.emplace_back(t.row(), t.col(), value);
  }
  for (int dof : dirichlet_.dofs) kept.emplace_back(dof, dof, 1.0);
  J.sparse.resize(n, n);
  J.sparse.setFromTriplets(kept.begin(), kept.end());
  for (auto& term : J.rank_one) {
    if (scale_by_inverse_mass_) term.left = term.left.cwiseQuotient(M);
    for (int dof : dirichlet_.dofs) term.left[dof] = 0.0;
  }
  return J;
}

StepOutcome integrate_step(const ForceModel& forces, const IntegratorConfig& cfg, const SystemState& current,
                           const std::optional<SystemState>& previous, const std::vector<ContactPoint>& contacts,
                           const DirichletConstraint& dirichlet, const StageSolver& solver) {
  const double h = cfg.h;
  const double t0 = current.t;
  const Eigen::VectorXd& M = forces.mass();
  const JacobianDetail detail = cfg.friction.detail;
  StepOutcome out;

  auto run_stage = [&](StageCoefficients stage, const Eigen::VectorXd& guess,
                       std::optional<Eigen::VectorXd> lagged) -> std::optional<Eigen::VectorXd> {
    // Positions at the step start are always admissible; use them when the guess inverts elements.
    Eigen::VectorXd start = guess;
    if (!problem_feasible(forces, stage, guess)) {
      start = (current.q - stage.q_base) / stage.c_q;
      for (size_t i = 0; i < dirichlet.dofs.size(); ++i) start[dirichlet.dofs[i]] = guess[dirichlet.dofs[i]];
    }
    ResidualProblem problem(forces, std::move(stage), contacts, std::move(lagged), cfg.friction.lagged, detail,
                            dirichlet);
    SolveResult result = solver(problem, start);
    const bool ok = result.report.converged();
    out.reports.push_back(std::move(result.report));
    if (!ok) {
      out.converged = false;
      return std::nullopt;
    }
    return std::move(result.v);
  };
  auto finish = [&](const Eigen::VectorXd& q, const Eigen::VectorXd& v) {
    out.state = SystemState{q, v, t0 + h};
    return out;
  };

  auto single_stage = [&](StageCoefficients stage) {
    const int passes = cfg.friction.lagged ? cfg.friction.fixed_point_iters : 1;
    Eigen::VectorXd guess = current.v;
    Eigen::VectorXd q_lag = current.q;
    Eigen::VectorXd q_new = current.q;
    for (int pass = 0; pass < passes; ++pass) {
      std::optional<Eigen::VectorXd> lagged;
      if (cfg.friction.lagged) lagged = q_lag;
      auto V = run_stage(stage, guess, std::move(lagged));
      if (!V) return finish(current.q, current.v);
      q_new = stage.q_base + stage.c_q * *V;
      guess = *V;
      q_lag = q_new;
    }
    return finish(q_new, guess);
  };

  switch (cfg.scheme) {
    case Scheme::BE:
      return single_stage({current.v, Eigen::VectorXd::Zero(M.size()), current.q, h, h, h, t0 + h});
    case Scheme::TR:
      return single_stage({current.v, 0.5 * h * explicit_force(forces, contacts, current, true, true),
                           current.q + 0.5 * h * current.v, 0.5 * h, 0.5 * h, 0.5 * h, t0 + h});
    case Scheme::TRDecoupled:
      return single_stage({current.v, 0.5 * h * explicit_force(forces, contacts, current, true, false),
                           current.q + 0.5 * h * current.v, 0.5 * h, h, 0.5 * h, t0 + h});
    case Scheme::TRExplicitContact: {
      Eigen::VectorXd e = 0.5 * h * explicit_force(forces, contacts, current, true, false) +
                          h * explicit_force(forces, contacts, current, false, true);
      return single_stage({current.v, std::move(e), current.q + 0.5 * h * current.v, 0.5 * h, 0.0, 0.5 * h,
                           t0 + h});
    }
    case Scheme::BDF2: {
      if (!previous)
        return single_stage({current.v, Eigen::VectorXd::Zero(M.size()), current.q, h, h, h, t0 + h});
      const double c = 2.0 * h / 3.0;
      return single_stage({(4.0 * current.v - previous->v) / 3.0, Eigen::VectorXd::Zero(M.size()),
                           (4.0 * current.q - previous->q) / 3.0, c, c, c, t0 + h});
    }
    case Scheme::TRBDF2: {
      const double gamma = 2.0 - std::sqrt(2.0);
      const double hg = 0.5 * gamma * h;
      auto Vg = run_stage({current.v, hg * explicit_force(forces, contacts, current, true, true),
                           current.q + hg * current.v, hg, hg, hg, t0 + gamma * h},
                          current.v, std::nullopt);
      if (!Vg) return finish(current.q, current.v);
      const Eigen::VectorXd qg = current.q + hg * (current.v + *Vg);
      const double w1 = 1.0 / (gamma * (2.0 - gamma));
      const double w0 = (1.0 - gamma) * (1.0 - gamma) / (gamma * (2.0 - gamma));
      const double c = (1.0 - gamma) / (2.0 - gamma) * h;
      StageCoefficients stage{w1 * *Vg - w0 * current.v, Eigen::VectorXd::Zero(M.size()),
                              w1 * qg - w0 * current.q, c, c, c, t0 + h};
      auto V = run_stage(stage, *Vg, std::nullopt);
      if (!V) return finish(current.q, current.v);
      return finish(stage.q_base + c * *V, *V);
    }
    case Scheme::SDIRK2: {
      const double gamma = 1.0 - 1.0 / std::sqrt(2.0);
      const double c = gamma * h;
      auto V1 = run_stage({current.v, Eigen::VectorXd::Zero(M.size()), current.q, c, c, c, t0 + c}, current.v,
                          std::nullopt);
      if (!V1) return finish(current.q, current.v);
      StageCoefficients stage{current.v, ((1.0 - gamma) / gamma) * M.cwiseProduct(*V1 - current.v),
                              current.q + (1.0 - gamma) * h * *V1, c, c, c, t0 + h};
      auto V2 = run_stage(stage, *V1, std::nullopt);
      if (!V2) return finish(current.q, current.v);
      return finish(stage.q_base + c * *V2, *V2);
    }
  }
  return out;
}

}  // namespace fricsim
