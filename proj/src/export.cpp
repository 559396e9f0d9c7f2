#include "fricsim/export.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "fricsim/error.hpp"

namespace fricsim {
namespace {

constexpr const char* kVersion = "0.1.0";

void append_number(std::string& out, double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  out += buffer;
}

}  // namespace

std::vector<std::string> csv_columns(const std::vector<std::string>& volume_names) {
  std::vector<std::string> cols = {"time",    "centroid_x",    "centroid_y",  "centroid_z",
                                   "kinetic", "elastic",       "penalty",     "gravity",
                                   "volume_energy", "total",   "deepest_gap", "max_sliding_speed"};
  for (const auto& name : volume_names) cols.push_back("volume_" + name);
  cols.push_back("kappa");
  return cols;
}

std::string format_csv(const TrajectoryRecord& record) {
  std::string out;
  const auto cols = csv_columns(record.volume_names);
  for (size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
  out += '\n';
  for (const auto& s : record.samples) {
    std::vector<double> row = {s.time,           s.centroid.x(),      s.centroid.y(),   s.centroid.z(),
                               s.energy.kinetic, s.energy.elastic,    s.energy.penalty, s.energy.gravity,
                               s.energy.volume,  s.energy.total(),    s.deepest_gap,    s.max_sliding_speed};
    row.insert(row.end(), s.volumes.begin(), s.volumes.end());
    row.push_back(s.kappa);
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      append_number(out, row[i]);
    }
    out += '\n';
  }
  return out;
}

std::string format_obj(const TetMesh& mesh, const Eigen::VectorXd& q) {
  std::string out;
  for (int i = 0; i < mesh.num_vertices(); ++i) {
    out += "v ";
    for (int k = 0; k < 3; ++k) {
      if (k) out += ' ';
      append_number(out, q[3 * i + k]);
    }
    out += '\n';
  }
  for (const auto& tri : mesh.surface_tris)
    out += "f " + std::to_string(tri[0] + 1) + " " + std::to_string(tri[1] + 1) + " " +
           std::to_string(tri[2] + 1) + "\n";
  return out;
}

std::filesystem::path snapshot_path(const std::filesystem::path& out_dir, int frame) {
  char name[32];
  std::snprintf(name, sizeof(name), "frame_%06d.obj", frame);
  return out_dir / name;
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw Error(ErrorCategory::Io, "cannot create directory '" + path.parent_path().string() + "': " + ec.message());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCategory::Io, "cannot write '" + path.string() + "'");
  out << contents;
  out.flush();
  if (!out) throw Error(ErrorCategory::Io, "write failed for '" + path.string() + "'");
}

std::string format_manifest(const SceneConfig& config) {
  nlohmann::json manifest;
  manifest["version"] = kVersion;
  manifest["eigen_version"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                              "." + std::to_string(EIGEN_MINOR_VERSION);
  manifest["compiler"] = __VERSION__;
  manifest["config"] = nlohmann::json::parse(dump_scene(config));
  return manifest.dump(2) + "\n";
}

RunSummary run_simulation(BuiltScene& scene, const SceneConfig& config,
                          const std::optional<std::filesystem::path>& out_dir, const StepObserver& observer) {
  Simulation& sim = scene.simulation;
  RunSummary summary;
  for (const auto& vol : sim.forces().volumes()) summary.trajectory.volume_names.push_back(vol.region.name());
  summary.min_end_gap = std::numeric_limits<double>::infinity();

  auto snapshot = [&](int step) {
    if (!out_dir || config.output.snapshot_every <= 0 || step % config.output.snapshot_every != 0) return;
    write_text_file(snapshot_path(*out_dir, summary.snapshots), format_obj(scene.mesh, sim.state().q));
    ++summary.snapshots;
  };
  if (out_dir) write_text_file(*out_dir / "manifest.json", format_manifest(config));

  summary.trajectory.samples.push_back(sim.sample());
  snapshot(0);
  const int steps = sim.config().num_steps();
  for (int k = 1; k <= steps; ++k) {
    const StepInfo info = sim.step();
    summary.max_kappa_retries = std::max(summary.max_kappa_retries, info.kappa_retries);
    summary.total_kappa_retries += info.kappa_retries;
    summary.min_end_gap =
        std::min(summary.min_end_gap, sim.forces().contact().deepest_gap(sim.state().q, sim.state().t));
    if (k % config.output.record_every == 0) summary.trajectory.samples.push_back(sim.sample());
    snapshot(k);
    if (observer) observer(sim, info);
    ++summary.steps;
  }
  if (out_dir) write_text_file(*out_dir / "trajectory.csv", format_csv(summary.trajectory));
  return summary;
}

}  // namespace fricsim
