#pragma once

// Block on a 10 degree incline: a stiff elastic box launched downhill that
// friction brings to rest, compared against rigid-body kinematics.

#include <string>
#include <vector>

#include "fricsim/integrators.hpp"
#include "fricsim/scene.hpp"

namespace fricsim {

inline constexpr double kBlockSlideDistance = 0.769;  // m
inline constexpr double kBlockSlideTime = 15.38;      // s
inline constexpr double kBlockSlideMu = 0.177;
inline constexpr double kBlockSlideInclineDegrees = 10.0;

/// Rigid block sliding up to rest: deceleration g (mu cos(theta) - sin(theta)),
/// stop time v0 / a and distance v0^2 / (2 a).
struct SlideKinematics {
  double deceleration = 0.0;
  double stop_time = 0.0;
  double stop_distance = 0.0;
};
SlideKinematics slide_kinematics(double mu, double incline_degrees, double initial_speed, double gravity);

/// Initial speed implied by the reference stop distance and time: 2 x_T / T.
double block_slide_initial_speed();

struct BlockSlideVariant {
  Scheme scheme = Scheme::BE;
  FrictionMode friction;
  double h = 0.01;
  double block_size = 0.1;  // m, cube edge
  int cells = 3;            // per edge, 6 tets per cell
  double mu = kBlockSlideMu;
  double epsilon = 1e-4;
  double max_duration = 30.0;
  /// Seconds the sliding speed must stay below epsilon to count as stopped.
  double stop_window = 1.0;

  std::string label() const;
};

struct BlockSlideResult {
  BlockSlideVariant variant;
  bool failed = false;
  std::string error;
  bool stopped = false;
  double stop_time = 0.0;       // start of the first full below-epsilon window
  double stop_distance = 0.0;   // centroid travel along the downhill tangent at stop_time
  double final_time = 0.0;
  double final_distance = 0.0;
  int max_kappa_retries = 0;
  std::vector<double> distance_history;  // one entry per step, starting at t = 0

  double distance_error() const { return (stop_distance - kBlockSlideDistance) / kBlockSlideDistance; }
  double time_error() const { return (stop_time - kBlockSlideTime) / kBlockSlideTime; }
};

/// Scene for one variant: incline plane through the origin, the block resting
/// on it (bottom face at half the contact distance) moving downhill.
SceneConfig block_slide_scene(const BlockSlideVariant& variant);

/// Run until the stop window completes or max_duration elapses. Solver
/// failures are recorded in the result rather than thrown.
BlockSlideResult run_block_slide(const BlockSlideVariant& variant);

/// {BE, TR} x {implicit, lagged:1, lagged:4} x h in {0.1, 0.05, 0.01, 0.005},
/// plus a half-size block and a frictionless block (implicit BE, h = 0.01).
std::vector<BlockSlideVariant> block_slide_matrix();

/// Runs variants on up to `threads` worker threads; results keep input order.
std::vector<BlockSlideResult> experiment_block_slide(const std::vector<BlockSlideVariant>& variants, int threads = 1);

/// Plain-text table, one line per variant.
std::string format_block_slide_report(const std::vector<BlockSlideResult>& results);

}  // namespace fricsim
