#include "fricsim/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "fricsim/error.hpp"

namespace fricsim {

int SimulationConfig::num_steps() const {
  return static_cast<int>(std::llround(duration / integrator.h));
}

Simulation::Simulation(ForceModel forces, SystemState initial, SimulationConfig config,
                       DirichletConstraint dirichlet)
    : forces_(std::move(forces)), state_(std::move(initial)), config_(config), dirichlet_(std::move(dirichlet)) {
  if (!state_.valid() || state_.q.size() != forces_.num_dofs())
    throw Error(ErrorCategory::Domain, "initial state does not match the mesh");
  config_.integrator.validate();
  config_.solver.validate();
}

std::vector<ContactPoint> Simulation::initial_contacts() const {
  const ContactModel& contact = forces_.contact();
  const double threshold = config_.candidate_factor * contact.delta();
  const double h = config_.integrator.h;
  const Eigen::VectorXd predicted = state_.q + h * state_.v;
  auto now = contact.candidates({&state_.q}, state_.t, threshold);
  auto later = contact.candidates({&predicted}, state_.t + h, threshold);
  std::set<std::pair<int, int>> keys;
  for (const auto& c : now) keys.insert({c.vertex, c.obstacle});
  for (const auto& c : later) keys.insert({c.vertex, c.obstacle});
  std::vector<ContactPoint> out;
  for (const auto& [v, o] : keys) out.push_back({v, o});
  return out;
}

StepInfo Simulation::step() {
  StepInfo info;
  info.step = steps_taken_;
  ContactModel& contact = forces_.contact();
  std::vector<ContactPoint> contacts = initial_contacts();
  const StageSolver solver = [&](const ResidualProblem& problem, const Eigen::VectorXd& guess) {
    return solve(problem, guess, config_.solver);
  };

  while (true) {
    StepOutcome outcome =
        integrate_step(forces_, config_.integrator, state_, previous_, contacts, dirichlet_, solver);
    if (!outcome.converged) {
      std::ostringstream msg;
      msg << "step " << steps_taken_ << " (t=" << state_.t << "): nonlinear solve failed: "
          << outcome.reports.back().summary();
      throw Error(ErrorCategory::Solver, msg.str());
    }
    if (!outcome.state.finite()) {
      std::ostringstream msg;
      msg << "step " << steps_taken_ << ": non-finite state after solve";
      throw Error(ErrorCategory::Solver, msg.str());
    }
    const double t_end = outcome.state.t;

    // Pairs that came within delta but were not in the frozen set.
    bool grew = false;
    for (const auto& pair : contact.all_pairs()) {
      if (std::find(contacts.begin(), contacts.end(), pair) != contacts.end()) continue;
      const Eigen::Vector3d x = outcome.state.q.segment<3>(3 * pair.vertex);
      if (evaluate_gap<double>(contact.obstacles()[pair.obstacle], x, t_end).d < contact.delta()) {
        contacts.push_back(pair);
        grew = true;
      }
    }
    if (grew) {
      std::sort(contacts.begin(), contacts.end(), [](const ContactPoint& a, const ContactPoint& b) {
        return std::pair(a.vertex, a.obstacle) < std::pair(b.vertex, b.obstacle);
      });
      if (++info.contact_set_retries > config_.max_contact_set_retries) {
        std::ostringstream msg;
        msg << "step " << steps_taken_ << ": contact set did not settle; reduce the time step";
        throw Error(ErrorCategory::Solver, msg.str());
      }
      continue;
    }

    const StiffenDecision decision = adaptive_stiffen(contact.deepest_gap(outcome.state.q, t_end), contact.penalty());
    if (decision.retry) {
      contact.set_kappa(decision.new_kappa);
      if (++info.kappa_retries > config_.max_kappa_retries) {
        std::ostringstream msg;
        msg << "step " << steps_taken_ << ": penetration persists after " << config_.max_kappa_retries
            << " stiffness increases; reduce the time step";
        throw Error(ErrorCategory::Solver, msg.str());
      }
      continue;
    }

    info.num_contacts = static_cast<int>(contacts.size());
    for (const auto& r : outcome.reports) info.newton_iterations += r.iterations;
    if (!outcome.reports.empty()) outcome.reports.back().kappa_bumps = info.kappa_retries;
    info.reports = std::move(outcome.reports);
    previous_ = state_;
    state_ = std::move(outcome.state);
    ++steps_taken_;
    return info;
  }
}

TrajectorySample Simulation::sample() const {
  TrajectorySample s;
  s.time = state_.t;
  s.centroid = forces_.centroid(state_.q);
  s.energy = forces_.energies(state_.q, state_.v, state_.t);
  const ContactModel& contact = forces_.contact();
  s.deepest_gap = contact.deepest_gap(state_.q, state_.t);
  s.max_sliding_speed = forces_.friction().max_sliding_speed(contact.all_pairs(), state_.q, state_.v, state_.t);
  for (const auto& vol : forces_.volumes()) s.volumes.push_back(vol.region.volume<double>(state_.q));
  s.kappa = contact.kappa();
  return s;
}

}  // namespace fricsim
