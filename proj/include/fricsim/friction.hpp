#pragma once

// Smoothed Coulomb / Stribeck / viscous friction against obstacles.
//
// Per contact: f = -c(|vbar|, lambda) vbar / |vbar| in the tangent plane, with
// vbar the relative tangential velocity, written as -B vbar phi(|vbar|) where
// phi = c / |vbar| stays bounded at zero speed.

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "fricsim/contact.hpp"
#include "fricsim/dual.hpp"

namespace fricsim {

/// Pre-sliding ramp s(v) = 2v/eps - v^2/eps^2 below eps, 1 above.
template <class T>
T smooth_s(const T& v, double eps) {
  if (!(v < eps)) return T(1.0);
  return (2.0 / eps) * v - (v * v) / (eps * eps);
}

inline double smooth_s_derivative(double v, double eps) {
  return v < eps ? 2.0 / eps - 2.0 * v / (eps * eps) : 0.0;
}

/// Compact bump g(x) = (2x + 1)(x - 1)^2 below 1, 0 above.
template <class T>
T stribeck_g(const T& x) {
  if (!(x < 1.0)) return T(0.0);
  const T y = x - 1.0;
  return (2.0 * x + 1.0) * y * y;
}

inline double stribeck_g_derivative(double x) { return x < 1.0 ? 6.0 * x * (x - 1.0) : 0.0; }

/// Coefficient in front of s(v) lambda: mu_d + (mu_s - mu_d) g(v / v_s).
template <class T>
T friction_coefficient(const T& v, const FrictionParams& p) {
  return p.mu_dynamic + (p.mu_static - p.mu_dynamic) * stribeck_g<T>(v / p.stribeck_velocity);
}

/// c(v, lambda) = (mu_d + (mu_s - mu_d) g(v / v_s)) s(v) lambda + mu_v v.
template <class T>
T friction_magnitude(const T& v, const T& lambda, const FrictionParams& p) {
  return friction_coefficient(v, p) * smooth_s(v, p.epsilon) * lambda + p.mu_viscous * v;
}

/// s(v) / v, evaluated without the division below eps.
template <class T>
T smooth_s_over_speed(const T& v, double eps) {
  if (!(v < eps)) return 1.0 / v;
  return 2.0 / eps - v / (eps * eps);
}

/// phi(v) = c(v, lambda) / v.
template <class T>
T friction_ratio(const T& v, const T& lambda, const FrictionParams& p) {
  return friction_coefficient(v, p) * smooth_s_over_speed(v, p.epsilon) * lambda + p.mu_viscous;
}

/// Euclidean norm with value and tangent 0 at the origin.
template <class T, int N>
T safe_norm(const Eigen::Matrix<T, N, 1>& x) {
  using std::sqrt;
  const T sq = x.squaredNorm();
  if (!(sq > 0.0)) return T(0.0);
  return sqrt(sq);
}

/// Friction on one contact given the normal, force magnitude and the
/// relative velocity (vertex minus obstacle surface).
template <class T>
Vec3<T> contact_friction_force(const FrictionParams& p, const Vec3<T>& normal, const T& lambda,
                               const Vec3<T>& relative_velocity) {
  const Eigen::Matrix<T, 3, 2> B = tangent_basis<T>(normal);
  const Eigen::Matrix<T, 2, 1> vbar = B.transpose() * relative_velocity;
  const T speed = safe_norm(vbar);
  return -(B * vbar) * friction_ratio(speed, lambda, p);
}

enum class JacobianDetail { WithSlidingBasisDerivatives, FrozenBasis };

struct FrictionMode {
  bool lagged = false;
  int fixed_point_iters = 1;
  JacobianDetail detail = JacobianDetail::WithSlidingBasisDerivatives;

  /// "implicit" or "lagged:N" with N >= 1. Throws Error(Config).
  static FrictionMode parse(const std::string& text);
  std::string to_string() const;
};

/// Friction over a contact list. Pure functions of the state.
class FrictionModel {
 public:
  explicit FrictionModel(const ContactModel& contact) : contact_(&contact) {}

  /// True when some obstacle has a nonzero friction coefficient.
  bool active() const;

  /// Accumulate scale * f_f into f. The sliding basis and obstacle velocity
  /// come from q_basis, lambda from q_contact. With `frozen` the geometry uses
  /// only the real parts of the positions, so derivatives flow through v only.
  template <class T>
  void add_force(const std::vector<ContactPoint>& contacts, const Vec<T>& q_basis, const Vec<T>& q_contact,
                 const Vec<T>& v, double t, Vec<T>& f, double scale = 1.0, bool frozen = false) const {
    const auto& obstacles = contact_->obstacles();
    for (const auto& c : contacts) {
      const auto& ob = obstacles[c.obstacle];
      if (!ob.friction.active()) continue;
      Vec3<T> xb = q_basis.template segment<3>(3 * c.vertex);
      Vec3<T> xc = q_contact.template segment<3>(3 * c.vertex);
      if (frozen) {
        xb = real_part(xb).template cast<T>();
        xc = real_part(xc).template cast<T>();
      }
      const T lambda = contact_magnitude(evaluate_gap<T>(ob, xc, t).d, contact_->delta(), contact_->kappa());
      if (!(lambda > 0.0)) continue;
      const Vec3<T> n = evaluate_gap<T>(ob, xb, t).n;
      const Vec3<T> u = Vec3<T>(v.template segment<3>(3 * c.vertex)) - ob.surface_velocity<T>(xb, t);
      f.template segment<3>(3 * c.vertex) += scale * contact_friction_force<T>(ob.friction, n, lambda, u);
    }
  }

  /// Convenience wrapper of add_force for doubles.
  Eigen::VectorXd force(const std::vector<ContactPoint>& contacts, const Eigen::VectorXd& q_basis,
                        const Eigen::VectorXd& q_contact, const Eigen::VectorXd& v, double t) const;

  /// Triplets of scale * d f_f / d v at geometry q_geom.
  void add_velocity_jacobian(const std::vector<ContactPoint>& contacts, const Eigen::VectorXd& q_geom,
                             const Eigen::VectorXd& v, double t, double scale,
                             std::vector<Eigen::Triplet<double>>& out) const;

  /// Triplets of scale * d f_f / d q with q_basis = q_contact = q (sliding
  /// basis, obstacle velocity and lambda all differentiated).
  void add_position_jacobian(const std::vector<ContactPoint>& contacts, const Eigen::VectorXd& q,
                             const Eigen::VectorXd& v, double t, double scale,
                             std::vector<Eigen::Triplet<double>>& out) const;

  /// max_i |vbar_i| over contacts with lambda > 0 (0 without contacts).
  double max_sliding_speed(const std::vector<ContactPoint>& contacts, const Eigen::VectorXd& q,
                           const Eigen::VectorXd& v, double t) const;

 private:
  struct LocalJacobians {
    Eigen::Matrix3d dv = Eigen::Matrix3d::Zero();
    Eigen::Matrix3d dx = Eigen::Matrix3d::Zero();
  };
  LocalJacobians local_jacobians(const ContactPoint& c, const Eigen::VectorXd& q, const Eigen::VectorXd& v,
                                 double t) const;

  const ContactModel* contact_;
};

}  // namespace fricsim
