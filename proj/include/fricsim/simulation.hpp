#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fricsim/forces.hpp"
#include "fricsim/integrators.hpp"
#include "fricsim/mesh.hpp"
#include "fricsim/solvers.hpp"

namespace fricsim {

struct SimulationConfig {
  IntegratorConfig integrator;
  SolverConfig solver;
  double duration = 1.0;
  /// Contact candidates: surface vertices with gap below factor * delta at
  /// the step start or at the predicted end-of-step position.
  double candidate_factor = 1.5;
  /// Hard cap on stiffness retries in one step (the kappa_max cap normally triggers first).
  int max_kappa_retries = 20;
  int max_contact_set_retries = 10;

  int num_steps() const;
};

/// One trajectory row.
struct TrajectorySample {
  double time = 0.0;
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  EnergyBreakdown energy;
  double deepest_gap = 0.0;
  double max_sliding_speed = 0.0;
  std::vector<double> volumes;
  double kappa = 0.0;
};

struct StepInfo {
  int step = 0;
  int kappa_retries = 0;
  int contact_set_retries = 0;
  int newton_iterations = 0;
  int num_contacts = 0;
  std::vector<SolveReport> reports;  // reports of the accepted attempt
};

/// Owns the state and steps a ForceModel forward in time.
class Simulation {
 public:
  Simulation(ForceModel forces, SystemState initial, SimulationConfig config, DirichletConstraint dirichlet = {});

  const SystemState& state() const { return state_; }
  const ForceModel& forces() const { return forces_; }
  const SimulationConfig& config() const { return config_; }
  int steps_taken() const { return steps_taken_; }

  /// Take one accepted step, retrying with enlarged contact sets and
  /// stiffened contact until every gap is positive. Throws Error(Solver)
  /// naming the step and the failing solve report.
  StepInfo step();

  TrajectorySample sample() const;

 private:
  std::vector<ContactPoint> initial_contacts() const;

  ForceModel forces_;
  SystemState state_;
  std::optional<SystemState> previous_;
  SimulationConfig config_;
  DirichletConstraint dirichlet_;
  int steps_taken_ = 0;
};

}  // namespace fricsim
