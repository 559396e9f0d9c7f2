#pragma once

#include <filesystem>
#include <string>

#include "fricsim/mesh.hpp"

namespace fricsim {

/// Structured box [0,size] split into nx*ny*nz hexes of 6 tets each, centered at the origin.
TetMesh make_box_mesh(const Eigen::Vector3d& size, int nx, int ny, int nz,
                      const MaterialParams& material);

/// Solid ball from a cube grid mapped smoothly onto the sphere; (2n)^3 hexes, 6 tets each.
TetMesh make_ball_mesh(double radius, int n, const MaterialParams& material);

/// Text tet mesh, Wavefront-flavoured, 1-based indices:
///   v x y z        vertex
///   t a b c d      tetrahedron
///   g name         start a named surface group
///   f a b c        outward surface triangle (optional; extracted when absent)
/// Throws Error(Io) naming the path when the file cannot be read, Error(Mesh) on bad content.
TetMesh read_tet_mesh(const std::filesystem::path& path, const MaterialParams& material);

void write_tet_mesh(const std::filesystem::path& path, const TetMesh& mesh);

}  // namespace fricsim
