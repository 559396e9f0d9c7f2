#include "fricsim/experiments.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <thread>

#include "fricsim/error.hpp"

namespace fricsim {
namespace {

constexpr double kGravity = 9.8;

Eigen::Vector3d incline_normal() {
  const double theta = kBlockSlideInclineDegrees * M_PI / 180.0;
  return {std::sin(theta), std::cos(theta), 0.0};
}

Eigen::Vector3d downhill_tangent() {
  const double theta = kBlockSlideInclineDegrees * M_PI / 180.0;
  return {std::cos(theta), -std::sin(theta), 0.0};
}

}  // namespace

SlideKinematics slide_kinematics(double mu, double incline_degrees, double initial_speed, double gravity) {
  const double theta = incline_degrees * M_PI / 180.0;
  SlideKinematics k;
  k.deceleration = gravity * (mu * std::cos(theta) - std::sin(theta));
  if (k.deceleration > 0.0) {
    k.stop_time = initial_speed / k.deceleration;
    k.stop_distance = initial_speed * initial_speed / (2.0 * k.deceleration);
  } else {
    k.stop_time = k.stop_distance = std::numeric_limits<double>::infinity();
  }
  return k;
}

double block_slide_initial_speed() { return 2.0 * kBlockSlideDistance / kBlockSlideTime; }

std::string BlockSlideVariant::label() const {
  char buffer[160];
  std::snprintf(buffer, sizeof(buffer), "%s/%s h=%g size=%g mu=%g", to_string(scheme).c_str(),
                friction.to_string().c_str(), h, block_size, mu);
  return buffer;
}

SceneConfig block_slide_scene(const BlockSlideVariant& variant) {
  SceneConfig c;
  c.duration = variant.max_duration;
  c.gravity = Eigen::Vector3d(0.0, -kGravity, 0.0);
  c.integrator.scheme = variant.scheme;
  c.integrator.friction = variant.friction;
  c.integrator.h = variant.h;
  c.contact.delta = 1e-3;

  BodySpec block;
  block.name = "block";
  block.mesh.generator = "box";
  block.mesh.size = Eigen::Vector3d::Constant(variant.block_size);
  block.mesh.resolution = {variant.cells, variant.cells, variant.cells};
  block.material.density = 1000.0;
  block.material.youngs_modulus = 1e7;
  block.material.poisson_ratio = 0.4;
  block.rotation_axis = Eigen::Vector3d::UnitZ();
  block.rotation_degrees = -kBlockSlideInclineDegrees;
  block.translation = incline_normal() * (0.5 * variant.block_size + 0.5 * c.contact.delta);
  block.velocity = block_slide_initial_speed() * downhill_tangent();
  c.bodies.push_back(block);

  Obstacle incline;
  incline.name = "incline";
  incline.kind = ObstacleKind::HalfSpace;
  incline.point = Eigen::Vector3d::Zero();
  incline.normal = incline_normal();
  incline.friction.mu_dynamic = variant.mu;
  incline.friction.mu_static = variant.mu;
  incline.friction.mu_viscous = 0.0;
  incline.friction.epsilon = variant.epsilon;
  incline.friction.stribeck_velocity = 10.0 * variant.epsilon;
  c.obstacles.push_back(incline);

  c.solver.config.max_iterations = 200;
  c.output.record_every = 10;
  return c;
}

BlockSlideResult run_block_slide(const BlockSlideVariant& variant) {
  BlockSlideResult result;
  result.variant = variant;
  try {
    const SceneConfig config = block_slide_scene(variant);
    BuiltScene scene = build_scene(config);
    Simulation& sim = scene.simulation;
    const Eigen::Vector3d tangent = downhill_tangent();
    const Eigen::Vector3d start = sim.forces().centroid(sim.state().q);
    const auto pairs = sim.forces().contact().all_pairs();
    auto distance = [&] { return (sim.forces().centroid(sim.state().q) - start).dot(tangent); };
    auto sliding = [&] {
      return sim.forces().friction().max_sliding_speed(pairs, sim.state().q, sim.state().v, sim.state().t);
    };

    double window_start = -1.0;
    double window_distance = 0.0;
    result.distance_history.push_back(0.0);
    const int steps = sim.config().num_steps();
    for (int k = 0; k < steps; ++k) {
      const StepInfo info = sim.step();
      result.max_kappa_retries = std::max(result.max_kappa_retries, info.kappa_retries);
      const double d = distance();
      result.distance_history.push_back(d);
      const double t = sim.state().t;
      if (sliding() <= variant.epsilon) {
        if (window_start < 0.0) {
          window_start = t;
          window_distance = d;
        }
        if (t - window_start >= variant.stop_window - 1e-9 * variant.h) {
          result.stopped = true;
          result.stop_time = window_start;
          result.stop_distance = window_distance;
          break;
        }
      } else {
        window_start = -1.0;
      }
    }
    result.final_time = sim.state().t;
    result.final_distance = result.distance_history.back();
    if (!result.stopped) {
      result.stop_time = result.final_time;
      result.stop_distance = result.final_distance;
    }
  } catch (const Error& e) {
    result.failed = true;
    result.error = std::string(to_string(e.category())) + ": " + e.what();
  }
  return result;
}

std::vector<BlockSlideVariant> block_slide_matrix() {
  std::vector<BlockSlideVariant> out;
  for (Scheme scheme : {Scheme::BE, Scheme::TR})
    for (const char* mode : {"implicit", "lagged:1", "lagged:4"})
      for (double h : {0.1, 0.05, 0.01, 0.005}) {
        BlockSlideVariant v;
        v.scheme = scheme;
        v.friction = FrictionMode::parse(mode);
        v.h = h;
        out.push_back(v);
      }
  BlockSlideVariant half;
  half.block_size = 0.05;
  out.push_back(half);
  BlockSlideVariant frictionless;
  frictionless.mu = 0.0;
  frictionless.max_duration = 5.0;
  out.push_back(frictionless);
  return out;
}

std::vector<BlockSlideResult> experiment_block_slide(const std::vector<BlockSlideVariant>& variants, int threads) {
  std::vector<BlockSlideResult> results(variants.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i = next++; i < variants.size(); i = next++) results[i] = run_block_slide(variants[i]);
  };
  const int count = std::max(1, std::min<int>(threads, static_cast<int>(variants.size())));
  std::vector<std::thread> pool;
  for (int i = 1; i < count; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return results;
}

std::string format_block_slide_report(const std::vector<BlockSlideResult>& results) {
  std::string out = "reference: distance 0.769 m, time 15.38 s\n";
  char line[320];
  for (const auto& r : results) {
    if (r.failed) {
      std::snprintf(line, sizeof(line), "%-40s FAILED %s\n", r.variant.label().c_str(), r.error.c_str());
    } else {
      std::snprintf(line, sizeof(line), "%-40s %s distance=%.5f m (%+.2f%%) time=%.3f s (%+.2f%%) kappa_retries<=%d\n",
                    r.variant.label().c_str(), r.stopped ? "stopped" : "moving ", r.stop_distance,
                    100.0 * r.distance_error(), r.stop_time, 100.0 * r.time_error(), r.max_kappa_retries);
    }
    out += line;
  }
  return out;
}

}  // namespace fricsim
