#pragma once

// Scene configuration: JSON schema, validation, normalized dump and
// construction of a ready-to-run Simulation.

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fricsim/contact.hpp"
#include "fricsim/integrators.hpp"
#include "fricsim/mesh.hpp"
#include "fricsim/simulation.hpp"
#include "fricsim/solvers.hpp"
#include "fricsim/volume.hpp"

namespace fricsim {

struct MeshSpec {
  std::string generator = "box";  // "box" | "ball" | "file"
  Eigen::Vector3d size = Eigen::Vector3d::Constant(0.1);
  std::array<int, 3> resolution = {2, 2, 2};
  double radius = 0.05;
  int ball_resolution = 2;
  std::string file;
};

struct BodySpec {
  std::string name = "body";
  MeshSpec mesh;
  MaterialParams material;
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  Eigen::Vector3d rotation_axis = Eigen::Vector3d::UnitZ();
  double rotation_degrees = 0.0;
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  std::vector<int> fixed_vertices;  // body-local indices, held at zero velocity
};

struct VolumeSpec {
  std::string body;
  std::string group = "surface";
  VolumeModel model = VolumeModel::Quadratic;
  double compressibility_atm = 1.0;     // 1/atm
  double initial_pressure_atm = 1.0;    // atm
  std::optional<double> rest_volume;    // m^3, default: volume at the initial state
};

struct ContactSpec {
  double delta = 1e-3;
  std::optional<double> kappa;  // default: balances the mean contact-vertex weight at delta/2
  double kappa_max = 1e12;
  double candidate_factor = 1.5;
};

struct SolverSpec {
  SolverConfig config;
  std::optional<double> r_tol_abs;  // default: 1e-7 h |M g|_inf (divided by mass for lagged residuals)
  std::optional<double> v_tol;      // default: 0.1 * smallest friction epsilon (1e-5 without friction)
};

struct OutputSpec {
  int record_every = 1;
  int snapshot_every = 0;  // 0 disables mesh snapshots
};

struct SceneConfig {
  double duration = 1.0;
  Eigen::Vector3d gravity = Eigen::Vector3d(0.0, -9.8, 0.0);
  IntegratorConfig integrator;
  SolverSpec solver;
  ContactSpec contact;
  std::vector<BodySpec> bodies;
  std::vector<Obstacle> obstacles;
  std::vector<VolumeSpec> volumes;
  OutputSpec output;
  /// Directory relative mesh paths are resolved against (not serialized).
  std::filesystem::path base_dir;
};

/// Parse and validate. Throws Error(Config) listing unknown keys or naming
/// the offending field path, Error(Io) naming a missing mesh file.
SceneConfig load_scene(const std::string& text, const std::filesystem::path& base_dir = {});
SceneConfig load_scene_file(const std::filesystem::path& path);

/// Normalized JSON with every default spelled out; load_scene(dump_scene(c))
/// dumps to the same bytes.
std::string dump_scene(const SceneConfig& config);

/// Everything needed to run a scene.
struct BuiltScene {
  TetMesh mesh;
  std::vector<int> body_vertex_offset;
  Simulation simulation;
};

BuiltScene build_scene(const SceneConfig& config);

}  // namespace fricsim
