#pragma once

// Shared fixtures, random generators and finite-difference oracles for the tests.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "fricsim/mesh.hpp"
#include "fricsim/mesh_io.hpp"

namespace fricsim::test {

/// Seeded generator; every property test draws from one of these so runs are repeatable.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
  Eigen::VectorXd vector(Eigen::Index n, double scale = 1.0) {
    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) out[i] = uniform(-scale, scale);
    return out;
  }
  Eigen::Vector3d vec3(double scale = 1.0) { return vector(3, scale); }
  Eigen::Vector3d unit3() {
    Eigen::Vector3d v;
    do v = vec3(); while (v.norm() < 1e-3);
    return v.normalized();
  }
  Eigen::Matrix3d rotation() {
    return Eigen::AngleAxisd(uniform(-M_PI, M_PI), unit3()).toRotationMatrix();
  }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

inline MaterialParams soft_material(double E = 1e5, double nu = 0.3, double rho = 1000.0) {
  MaterialParams m;
  m.youngs_modulus = E;
  m.poisson_ratio = nu;
  m.density = rho;
  return m;
}

/// Mesh from raw tets with extracted surface and a single "surface" group.
inline TetMesh mesh_from_tets(std::vector<Eigen::Vector3d> positions, std::vector<Tet> tets,
                              const MaterialParams& material) {
  TetMesh mesh;
  mesh.rest_positions = std::move(positions);
  mesh.tets = std::move(tets);
  mesh.materials = {material};
  mesh.element_material.assign(mesh.tets.size(), 0);
  mesh.body_of_vertex.assign(mesh.rest_positions.size(), 0);
  mesh.surface_tris = extract_surface(mesh.tets, mesh.rest_positions);
  auto& all = mesh.surface_groups["surface"];
  all.resize(mesh.surface_tris.size());
  std::iota(all.begin(), all.end(), 0);
  return mesh;
}

/// Right-angle tet with unit legs (volume 1/6).
inline TetMesh unit_tet(const MaterialParams& material = soft_material()) {
  return mesh_from_tets({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}}, {{0, 1, 2, 3}}, material);
}

/// Two tets sharing the face (1, 2, 3).
inline TetMesh two_tets(const MaterialParams& material = soft_material()) {
  return mesh_from_tets({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 1}}, {{0, 1, 2, 3}, {4, 3, 2, 1}},
                        material);
}

/// Small cube of 2x2x2 cells (27 vertices, 48 tets).
inline TetMesh small_box(double size = 0.1, const MaterialParams& material = soft_material(), int cells = 2) {
  return make_box_mesh(Eigen::Vector3d::Constant(size), cells, cells, cells, material);
}

inline double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double scale = std::max({a.norm(), b.norm(), 1e-300});
  return (a - b).norm() / scale;
}

/// Central difference of a vector function along `dir`.
inline Eigen::VectorXd fd_directional(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& fn,
                                      const Eigen::VectorXd& x, const Eigen::VectorXd& dir, double step) {
  return (fn(x + step * dir) - fn(x - step * dir)) / (2.0 * step);
}

/// Central-difference gradient of a scalar function.
inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& fn, const Eigen::VectorXd& x,
                                   double step) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + step;
    const double fp = fn(xp);
    xp[i] = x[i] - step;
    const double fm = fn(xp);
    xp[i] = x[i];
    g[i] = (fp - fm) / (2.0 * step);
  }
  return g;
}

inline Eigen::SparseMatrix<double> from_triplets(int n, const std::vector<Eigen::Triplet<double>>& triplets) {
  Eigen::SparseMatrix<double> m(n, n);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

}  // namespace fricsim::test
