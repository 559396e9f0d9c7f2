#pragma once

// Simulation loop with recording, plus CSV / mesh snapshot / manifest output.

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fricsim/scene.hpp"
#include "fricsim/simulation.hpp"

namespace fricsim {

struct TrajectoryRecord {
  std::vector<std::string> volume_names;
  std::vector<TrajectorySample> samples;
};

/// Column order of the trajectory CSV:
///   time, centroid_x, centroid_y, centroid_z, kinetic, elastic, penalty,
///   gravity, volume_energy, total, deepest_gap, max_sliding_speed,
///   volume_<region>... (one per region), kappa
std::vector<std::string> csv_columns(const std::vector<std::string>& volume_names);

/// Header plus one row per sample, every value printed with 17 significant digits.
std::string format_csv(const TrajectoryRecord& record);

/// Vertices of q and the surface triangles of the mesh, 1-based.
std::string format_obj(const TetMesh& mesh, const Eigen::VectorXd& q);

/// Path of snapshot `frame` inside `out_dir` (frame_%06d.obj).
std::filesystem::path snapshot_path(const std::filesystem::path& out_dir, int frame);

/// Write `contents` to `path`, creating parent directories. Throws Error(Io) naming the path.
void write_text_file(const std::filesystem::path& path, const std::string& contents);

std::string format_manifest(const SceneConfig& config);

struct RunSummary {
  TrajectoryRecord trajectory;
  int steps = 0;
  int snapshots = 0;
  int max_kappa_retries = 0;
  int total_kappa_retries = 0;
  /// Smallest deepest gap over all end-of-step states.
  double min_end_gap = 0.0;
};

/// Per-step observer, called after every accepted step.
using StepObserver = std::function<void(const Simulation&, const StepInfo&)>;

/// Step `scene` for its duration, sampling every output.record_every steps
/// (and at t = 0). With an output directory, writes trajectory.csv,
/// frame_%06d.obj every output.snapshot_every steps and manifest.json.
/// Solver failures propagate as Error(Solver) naming the step.
RunSummary run_simulation(BuiltScene& scene, const SceneConfig& config,
                          const std::optional<std::filesystem::path>& out_dir = std::nullopt,
                          const StepObserver& observer = {});

}  // namespace fricsim
