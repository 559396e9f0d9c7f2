#include "fricsim/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fricsim/error.hpp"

namespace fricsim {

void MaterialParams::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw Error(ErrorCategory::Domain, "material." + field + ": " + why);
  };
  if (!(density > 0.0)) fail("density", "must be > 0");
  if (!(youngs_modulus > 0.0)) fail("youngs_modulus", "must be > 0");
  if (!(poisson_ratio >= 0.0 && poisson_ratio < 0.5)) fail("poisson_ratio", "must lie in [0, 0.5)");
  if (!(rayleigh_alpha >= 0.0)) fail("rayleigh_alpha", "must be >= 0");
  if (!(rayleigh_beta >= 0.0)) fail("rayleigh_beta", "must be >= 0");
}

Eigen::VectorXd TetMesh::rest_state() const {
  Eigen::VectorXd q(num_dofs());
  for (int i = 0; i < num_vertices(); ++i) q.segment<3>(3 * i) = rest_positions[i];
  return q;
}

std::vector<int> TetMesh::surface_vertices() const {
  std::vector<int> out;
  out.reserve(surface_tris.size() * 3);
  for (const auto& t : surface_tris) out.insert(out.end(), t.begin(), t.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void TetMesh::append(const TetMesh& other, const std::string& name) {
  const int vert_offset = num_vertices();
  const int mat_offset = static_cast<int>(materials.size());
  const int tri_offset = static_cast<int>(surface_tris.size());
  const int body = body_of_vertex.empty()
                       ? 0
                       : *std::max_element(body_of_vertex.begin(), body_of_vertex.end()) + 1;

  rest_positions.insert(rest_positions.end(), other.rest_positions.begin(), other.rest_positions.end());
  for (const auto& t : other.tets)
    tets.push_back({t[0] + vert_offset, t[1] + vert_offset, t[2] + vert_offset, t[3] + vert_offset});
  for (const auto& t : other.surface_tris)
    surface_tris.push_back({t[0] + vert_offset, t[1] + vert_offset, t[2] + vert_offset});
  for (int m : other.element_material) element_material.push_back(m + mat_offset);
  materials.insert(materials.end(), other.materials.begin(), other.materials.end());
  body_of_vertex.insert(body_of_vertex.end(), other.rest_positions.size(), body);
  for (const auto& [group, tris] : other.surface_groups) {
    auto& dst = surface_groups[name + "/" + group];
    for (int t : tris) dst.push_back(t + tri_offset);
  }
}

double signed_tet_volume(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                         const Eigen::Vector3d& c, const Eigen::Vector3d& d) {
  return (b - a).dot((c - a).cross(d - a)) / 6.0;
}

std::vector<Tri> extract_surface(const std::vector<Tet>& tets,
                                 const std::vector<Eigen::Vector3d>& positions) {
  // Face key is the sorted vertex triple; value holds the oriented face and a count.
  std::map<std::array<int, 3>, std::pair<Tri, int>> faces;
  static constexpr int kFaces[4][4] = {{1, 2, 3, 0}, {0, 3, 2, 1}, {0, 1, 3, 2}, {0, 2, 1, 3}};
  for (const auto& t : tets) {
    for (const auto& f : kFaces) {
      Tri tri{t[f[0]], t[f[1]], t[f[2]]};
      const int opposite = t[f[3]];
      const Eigen::Vector3d n = (positions[tri[1]] - positions[tri[0]])
                                    .cross(positions[tri[2]] - positions[tri[0]]);
      if (n.dot(positions[opposite] - positions[tri[0]]) > 0.0) std::swap(tri[1], tri[2]);
      std::array<int, 3> key = tri;
      std::sort(key.begin(), key.end());
      auto [it, inserted] = faces.try_emplace(key, tri, 0);
      ++it->second.second;
    }
  }
  std::vector<Tri> out;
  for (const auto& [key, entry] : faces)
    if (entry.second == 1) out.push_back(entry.first);
  return out;
}

Eigen::VectorXd build_lumped_mass(const TetMesh& mesh) {
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(mesh.num_dofs());
  for (int e = 0; e < mesh.num_tets(); ++e) {
    const auto& t = mesh.tets[e];
    const double vol = signed_tet_volume(mesh.rest_positions[t[0]], mesh.rest_positions[t[1]],
                                         mesh.rest_positions[t[2]], mesh.rest_positions[t[3]]);
    if (!(vol > 0.0)) {
      std::ostringstream msg;
      msg << "tet " << e << " has non-positive rest volume " << vol;
      throw Error(ErrorCategory::Mesh, msg.str());
    }
    const double share = mesh.material_of(e).density * vol / 4.0;
    for (int v : t)
      for (int k = 0; k < 3; ++k) mass[3 * v + k] += share;
  }
  return mass;
}

Eigen::VectorXd advance_positions(const Eigen::VectorXd& q, const Eigen::VectorXd& v, double h) {
  if (q.size() != v.size())
    throw Error(ErrorCategory::Domain, "advance_positions: q and v lengths differ");
  if (!(h > 0.0)) throw Error(ErrorCategory::Domain, "advance_positions: step must be > 0");
  return q + h * v;
}

}  // namespace fricsim
