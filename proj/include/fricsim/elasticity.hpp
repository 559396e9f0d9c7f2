#pragma once

// Neo-Hookean tetrahedral elasticity and Rayleigh damping.
//
// Energy density: psi(F) = mu/2 (tr(F^T F) - 3) - mu ln J + lambda/2 (ln J)^2,
// J = det F. psi(I) = 0 and psi is rotation invariant. Elements with J <= 0
// have no finite energy; evaluation reports them as infeasible.

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "fricsim/dual.hpp"
#include "fricsim/mesh.hpp"

namespace fricsim {

using Triplets = std::vector<Eigen::Triplet<double>>;
using SparseMatrix = Eigen::SparseMatrix<double>;

/// Per-element rest data.
struct ElasticElement {
  Tet vertices;
  Eigen::Matrix3d dm_inv;   // inverse rest shape matrix
  double volume = 0.0;      // rest volume
  double mu = 0.0;
  double lambda = 0.0;
  double alpha = 0.0;       // Rayleigh mass coefficient
  double beta = 0.0;        // Rayleigh stiffness coefficient
  double vertex_mass = 0.0; // rho * volume / 4
};

template <class T>
T neo_hookean_density(const Mat3<T>& F, double mu, double lambda) {
  using std::log;
  const T J = F.determinant();
  if (!(J > 0.0)) return T(std::numeric_limits<double>::infinity());
  const T logJ = log(J);
  return 0.5 * mu * (F.squaredNorm() - 3.0) - mu * logJ + 0.5 * lambda * logJ * logJ;
}

/// First Piola-Kirchhoff stress dpsi/dF. Requires det F > 0.
template <class T>
Mat3<T> neo_hookean_stress(const Mat3<T>& F, double mu, double lambda) {
  using std::log;
  const Mat3<T> FinvT = F.inverse().transpose();
  const T logJ = log(F.determinant());
  return mu * (F - FinvT) + (lambda * logJ) * FinvT;
}

/// Directional derivative of the stress, dP(F)[dF].
template <class T>
Mat3<T> neo_hookean_stress_differential(const Mat3<T>& F, const Mat3<T>& dF, double mu,
                                        double lambda) {
  using std::log;
  const Mat3<T> Finv = F.inverse();
  const Mat3<T> FinvT = Finv.transpose();
  const T logJ = log(F.determinant());
  const T trace = (Finv * dF).trace();
  return mu * dF + (mu - lambda * logJ) * (FinvT * dF.transpose() * FinvT) + (lambda * trace) * FinvT;
}

/// Gather the 12 element coordinates of tet `e` from stacked vector `x`.
template <class T>
Eigen::Matrix<T, 12, 1> gather(const Vec<T>& x, const Tet& tet) {
  Eigen::Matrix<T, 12, 1> out;
  for (int a = 0; a < 4; ++a) out.template segment<3>(3 * a) = x.template segment<3>(3 * tet[a]);
  return out;
}

template <class T>
void scatter_add(const Eigen::Matrix<T, 12, 1>& local, const Tet& tet, Vec<T>& x) {
  for (int a = 0; a < 4; ++a) x.template segment<3>(3 * tet[a]) += local.template segment<3>(3 * a);
}

template <class T>
Mat3<T> shape_matrix(const Eigen::Matrix<T, 12, 1>& xe) {
  Mat3<T> Ds;
  for (int j = 0; j < 3; ++j) Ds.col(j) = xe.template segment<3>(3 * (j + 1)) - xe.template segment<3>(0);
  return Ds;
}

/// Spread a 3x3 "column per vertex 1..3" block onto 12 element coordinates,
/// with vertex 0 taking minus the sum.
template <class T>
Eigen::Matrix<T, 12, 1> spread_columns(const Mat3<T>& G) {
  Eigen::Matrix<T, 12, 1> out;
  out.template segment<3>(0) = -(G.col(0) + G.col(1) + G.col(2));
  for (int j = 0; j < 3; ++j) out.template segment<3>(3 * (j + 1)) = G.col(j);
  return out;
}

/// Elastic energy gradient of one element (= minus its force). Returns false
/// when the element is inverted.
template <class T>
bool element_gradient(const ElasticElement& e, const Eigen::Matrix<T, 12, 1>& xe,
                      Eigen::Matrix<T, 12, 1>& grad) {
  const Mat3<T> Dm_inv = e.dm_inv.template cast<T>();
  const Mat3<T> F = shape_matrix(xe) * Dm_inv;
  if (!(F.determinant() > 0.0)) return false;
  const Mat3<T> P = neo_hookean_stress(F, e.mu, e.lambda);
  grad = spread_columns<T>(e.volume * (P * Dm_inv.transpose()));
  return true;
}

/// Element stiffness applied to a direction, K_e(x_e) dx_e. Returns false on inversion.
template <class T>
bool element_hessian_product(const ElasticElement& e, const Eigen::Matrix<T, 12, 1>& xe,
                             const Eigen::Matrix<T, 12, 1>& dxe, Eigen::Matrix<T, 12, 1>& out) {
  const Mat3<T> Dm_inv = e.dm_inv.template cast<T>();
  const Mat3<T> F = shape_matrix(xe) * Dm_inv;
  if (!(F.determinant() > 0.0)) return false;
  const Mat3<T> dF = shape_matrix(dxe) * Dm_inv;
  const Mat3<T> dP = neo_hookean_stress_differential(F, dF, e.mu, e.lambda);
  out = spread_columns<T>(e.volume * (dP * Dm_inv.transpose()));
  return true;
}

/// Precomputed rest data plus energy, force, stiffness and Rayleigh damping.
/// Immutable after construction.
class ElasticModel {
 public:
  explicit ElasticModel(const TetMesh& mesh);

  const std::vector<ElasticElement>& elements() const { return elements_; }
  int num_dofs() const { return num_dofs_; }

  /// Sum of vol * psi(F). +infinity if any element is inverted.
  /// Throws Error(Domain) on non-finite positions.
  double energy(const Eigen::VectorXd& q) const;

  /// f_e = -dW/dq. Throws Error(Domain) on non-finite input or an inverted element.
  Eigen::VectorXd force(const Eigen::VectorXd& q) const;

  /// K = -df_e/dq, assembled sparse. Throws like force().
  SparseMatrix stiffness(const Eigen::VectorXd& q) const;

  /// f_d = -(alpha M + beta K(q)) v.
  Eigen::VectorXd damping_force(const Eigen::VectorXd& q, const Eigen::VectorXd& v) const;

  bool has_damping() const { return has_alpha_ || has_beta_; }
  bool has_stiffness_damping() const { return has_beta_; }

  /// Accumulate scale * f_e(q) into f. Returns false if an element is inverted.
  template <class T>
  bool add_force(const Vec<T>& q, Vec<T>& f, double scale = 1.0) const {
    Eigen::Matrix<T, 12, 1> grad;
    for (const auto& e : elements_) {
      if (!element_gradient<T>(e, gather(q, e.vertices), grad)) return false;
      scatter_add<T>((-scale) * grad, e.vertices, f);
    }
    return true;
  }

  /// Accumulate scale * f_d(q, v) into f. Returns false if an element is inverted.
  template <class T>
  bool add_damping_force(const Vec<T>& q, const Vec<T>& v, Vec<T>& f, double scale = 1.0) const {
    if (!has_damping()) return true;
    Eigen::Matrix<T, 12, 1> kv;
    for (const auto& e : elements_) {
      const Eigen::Matrix<T, 12, 1> ve = gather(v, e.vertices);
      Eigen::Matrix<T, 12, 1> local = (e.alpha * e.vertex_mass) * ve;
      if (e.beta > 0.0) {
        if (!element_hessian_product<T>(e, gather(q, e.vertices), ve, kv)) return false;
        local += e.beta * kv;
      }
      scatter_add<T>((-scale) * local, e.vertices, f);
    }
    return true;
  }

  /// Triplets of scale * K(q). Returns false on inversion.
  bool add_stiffness_triplets(const Eigen::VectorXd& q, double scale, Triplets& out) const;

  /// Triplets of scale * d f_d / d v = -scale (alpha M + beta K(q)).
  bool add_damping_velocity_triplets(const Eigen::VectorXd& q, double scale, Triplets& out) const;

  /// Triplets of scale * d f_d / d q = -scale * beta * d(K(q) v)/dq, the
  /// third-derivative contraction, computed per element with dual numbers.
  bool add_damping_position_triplets(const Eigen::VectorXd& q, const Eigen::VectorXd& v,
                                     double scale, Triplets& out) const;

 private:
  std::vector<ElasticElement> elements_;
  int num_dofs_ = 0;
  bool has_alpha_ = false;
  bool has_beta_ = false;
};

/// Dense 12x12 element Hessian (for tests and assembly).
Eigen::Matrix<double, 12, 12> element_hessian(const ElasticElement& e,
                                              const Eigen::Matrix<double, 12, 1>& xe);

}  // namespace fricsim
