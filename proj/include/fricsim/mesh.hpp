#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fricsim {

/// Material of a group of tetrahedra. SI units throughout.
struct MaterialParams {
  double density = 1000.0;        // kg/m^3
  double youngs_modulus = 1e5;    // Pa
  double poisson_ratio = 0.3;     // in [0, 0.5)
  double rayleigh_alpha = 0.0;    // 1/s, mass-proportional damping
  double rayleigh_beta = 0.0;     // s, stiffness-proportional damping

  double mu() const { return youngs_modulus / (2.0 * (1.0 + poisson_ratio)); }
  double lambda() const {
    return youngs_modulus * poisson_ratio / ((1.0 + poisson_ratio) * (1.0 - 2.0 * poisson_ratio));
  }

  /// Throws Error(Domain) naming the offending field.
  void validate() const;
};

using Tet = std::array<int, 4>;
using Tri = std::array<int, 3>;

/// Tetrahedral mesh with outward-oriented boundary triangles. Several bodies
/// can live in one mesh; `body_of_vertex` tells them apart.
struct TetMesh {
  std::vector<Eigen::Vector3d> rest_positions;
  std::vector<Tet> tets;
  std::vector<Tri> surface_tris;
  std::vector<int> element_material;
  std::vector<MaterialParams> materials;
  std::vector<int> body_of_vertex;
  /// Named subsets of surface_tris (indices), e.g. "surface" or groups read from file.
  std::map<std::string, std::vector<int>> surface_groups;

  int num_vertices() const { return static_cast<int>(rest_positions.size()); }
  int num_dofs() const { return 3 * num_vertices(); }
  int num_tets() const { return static_cast<int>(tets.size()); }

  const MaterialParams& material_of(int tet) const { return materials[element_material[tet]]; }

  /// Stacked rest positions, length 3 * num_vertices().
  Eigen::VectorXd rest_state() const;

  /// Sorted, unique list of vertices referenced by surface_tris.
  std::vector<int> surface_vertices() const;

  /// Append another mesh as a new body. Surface groups are prefixed "<name>/".
  void append(const TetMesh& other, const std::string& name);
};

double signed_tet_volume(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                         const Eigen::Vector3d& c, const Eigen::Vector3d& d);

/// Boundary faces of a tet soup (faces used by exactly one tet), oriented so
/// their normals point away from the owning tet.
std::vector<Tri> extract_surface(const std::vector<Tet>& tets,
                                 const std::vector<Eigen::Vector3d>& positions);

/// Lumped mass per degree of freedom: rho * vol / 4 to each tet vertex,
/// repeated over the three coordinates. Throws Error(Mesh) on a tet with
/// non-positive rest volume, naming the element.
Eigen::VectorXd build_lumped_mass(const TetMesh& mesh);

/// q + h v. Throws Error(Domain) when lengths differ or h <= 0.
Eigen::VectorXd advance_positions(const Eigen::VectorXd& q, const Eigen::VectorXd& v, double h);

/// Generalized positions and velocities of all vertices at time t.
struct SystemState {
  Eigen::VectorXd q;
  Eigen::VectorXd v;
  double t = 0.0;

  bool valid() const { return q.size() == v.size() && q.size() % 3 == 0; }
  bool finite() const { return q.allFinite() && v.allFinite(); }
};

}  // namespace fricsim
