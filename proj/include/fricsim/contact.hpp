#pragma once

// Penalty contact against analytic obstacles (half-spaces and spheres) that
// follow scripted rigid motions.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "fricsim/dual.hpp"

namespace fricsim {

/// Friction coefficients of one obstacle surface.
struct FrictionParams {
  double mu_dynamic = 0.0;
  double mu_static = 0.0;
  double mu_viscous = 0.0;       // N s/m
  double epsilon = 1e-4;         // sliding velocity tolerance, m/s
  double stribeck_velocity = 1e-3;  // m/s

  bool active() const { return mu_dynamic > 0.0 || mu_static > 0.0 || mu_viscous > 0.0; }

  /// Throws Error(Domain) naming the field. Returns a warning text (empty if none).
  std::string validate() const;
};

/// Piecewise-linear translation keyframes plus a constant angular velocity
/// about the obstacle's (translated) reference point.
struct ObstacleMotion {
  struct Keyframe {
    double time = 0.0;
    Eigen::Vector3d offset = Eigen::Vector3d::Zero();
  };
  std::vector<Keyframe> keyframes;  // strictly increasing times
  Eigen::Vector3d angular_velocity = Eigen::Vector3d::Zero();  // rad/s

  Eigen::Vector3d offset(double t) const;
  /// Translation velocity; left limit at keyframes, zero outside the keyframe span.
  Eigen::Vector3d linear_velocity(double t) const;
  Eigen::Matrix3d rotation(double t) const;
  bool is_static() const;
};

enum class ObstacleKind { HalfSpace, Sphere };

struct Obstacle {
  std::string name;
  ObstacleKind kind = ObstacleKind::HalfSpace;
  Eigen::Vector3d point = Eigen::Vector3d::Zero();   // plane point or sphere center
  Eigen::Vector3d normal = Eigen::Vector3d::UnitY(); // plane outward normal (unit)
  double radius = 1.0;
  bool inside = false;  // sphere: the body lives inside the sphere
  ObstacleMotion motion;
  FrictionParams friction;

  /// Throws Error(Domain) naming the field.
  void validate() const;

  /// Surface velocity of the obstacle at the material point coinciding with x.
  template <class T>
  Vec3<T> surface_velocity(const Vec3<T>& x, double t) const {
    const Eigen::Vector3d ref = point + motion.offset(t);
    const Eigen::Vector3d omega = motion.angular_velocity;
    return motion.linear_velocity(t).cast<T>() + omega.cast<T>().cross(x - ref.cast<T>());
  }
};

/// Signed distance and outward unit normal at a point.
template <class T>
struct GapSample {
  T d;
  Vec3<T> n;
};

template <class T>
GapSample<T> evaluate_gap(const Obstacle& ob, const Vec3<T>& x, double t) {
  using std::sqrt;
  const Eigen::Vector3d ref = ob.point + ob.motion.offset(t);
  if (ob.kind == ObstacleKind::HalfSpace) {
    const Eigen::Vector3d n = ob.motion.rotation(t) * ob.normal;
    const Vec3<T> nt = n.cast<T>();
    return {nt.dot(x - ref.cast<T>()), nt};
  }
  const Vec3<T> r = x - ref.cast<T>();
  const T rho = sqrt(r.squaredNorm());
  const double sign = ob.inside ? -1.0 : 1.0;
  // At the exact center the normal is undefined; pick +y.
  if (!(rho > 0.0)) return {T(sign * (-ob.radius)), Vec3<T>(T(0.0), T(sign), T(0.0))};
  return {sign * (rho - ob.radius), (sign / rho) * r};
}

/// Normal derivative dn/dx (3x3, symmetric). Zero for planes.
Eigen::Matrix3d gap_normal_derivative(const Obstacle& ob, const Eigen::Vector3d& x, double t);

/// Orthonormal tangent pair for a unit normal: b1 is the projection of e_x
/// (e_y when |n . e_x| > 0.9) onto the tangent plane, b2 = n x b1.
template <class T>
Eigen::Matrix<T, 3, 2> tangent_basis(const Vec3<T>& n) {
  using std::sqrt;
  const Vec3<T> axis = (std::abs(value(n[0])) > 0.9) ? Vec3<T>(T(0.0), T(1.0), T(0.0))
                                                       : Vec3<T>(T(1.0), T(0.0), T(0.0));
  Vec3<T> b1 = axis - n * n.dot(axis);
  b1 /= sqrt(b1.squaredNorm());
  Eigen::Matrix<T, 3, 2> B;
  B.col(0) = b1;
  B.col(1) = n.cross(b1);
  return B;
}

/// Contact stiffness control.
struct PenaltyParams {
  double delta = 1e-3;      // thickness tolerance, m
  double kappa = 1e3;       // N/m^2
  double kappa_max = 1e12;

  void validate() const;
};

/// Cubic penalty b(x) = -kappa (x - delta)^3 / delta for x < delta, else 0.
template <class T>
T penalty_b(const T& x, double delta, double kappa) {
  if (!(x < delta)) return T(0.0);
  const T y = x - delta;
  return (-kappa / delta) * y * y * y;
}

/// b'(x).
template <class T>
T penalty_db(const T& x, double delta, double kappa) {
  if (!(x < delta)) return T(0.0);
  const T y = x - delta;
  return (-3.0 * kappa / delta) * y * y;
}

/// b''(x).
inline double penalty_d2b(double x, double delta, double kappa) {
  if (!(x < delta)) return 0.0;
  return (-6.0 * kappa / delta) * (x - delta);
}

/// Contact force magnitude lambda = -b'(d) >= 0.
template <class T>
T contact_magnitude(const T& d, double delta, double kappa) {
  return -penalty_db(d, delta, kappa);
}

/// One potential contact: a surface vertex against an obstacle.
struct ContactPoint {
  int vertex = 0;
  int obstacle = 0;

  friend bool operator==(const ContactPoint&, const ContactPoint&) = default;
};

/// Geometry and magnitudes of a contact list at one configuration.
struct ContactSet {
  std::vector<ContactPoint> contacts;
  std::vector<double> gap;
  std::vector<double> magnitude;          // lambda
  std::vector<Eigen::Vector3d> normal;
  std::vector<Eigen::Matrix<double, 3, 2>> tangents;
  std::vector<Eigen::Vector3d> obstacle_velocity;

  int size() const { return static_cast<int>(contacts.size()); }
};

/// Obstacles, surface vertex list and penalty state. kappa is the only
/// mutable piece and changes only between solves.
class ContactModel {
 public:
  ContactModel() = default;
  ContactModel(std::vector<Obstacle> obstacles, std::vector<int> surface_vertices, PenaltyParams penalty);

  const std::vector<Obstacle>& obstacles() const { return obstacles_; }
  const std::vector<int>& surface_vertices() const { return surface_vertices_; }
  const PenaltyParams& penalty() const { return penalty_; }
  double kappa() const { return penalty_.kappa; }
  double delta() const { return penalty_.delta; }
  void set_kappa(double kappa) { penalty_.kappa = kappa; }
  bool empty() const { return obstacles_.empty(); }

  /// Surface vertex/obstacle pairs with gap below `threshold` in any of the
  /// given configurations, sorted by (vertex, obstacle).
  std::vector<ContactPoint> candidates(const std::vector<const Eigen::VectorXd*>& configs, double t,
                                       double threshold) const;

  /// All surface vertex/obstacle pairs.
  std::vector<ContactPoint> all_pairs() const;

  /// Geometry of the given contacts at q and obstacle time t.
  ContactSet evaluate(const std::vector<ContactPoint>& contacts, const Eigen::VectorXd& q, double t) const;

  /// Minimum gap over all surface vertex/obstacle pairs (+inf with no obstacles).
  double deepest_gap(const Eigen::VectorXd& q, double t) const;

  /// Penalty energy sum b(d_i) over the given contacts.
  double energy(const std::vector<ContactPoint>& contacts, const Eigen::VectorXd& q, double t) const;

  /// Accumulate scale * f_c into f, f_c = sum lambda_i n_i at the contact vertex.
  template <class T>
  void add_force(const std::vector<ContactPoint>& contacts, const Vec<T>& q, double t, Vec<T>& f,
                 double scale = 1.0) const {
    for (const auto& c : contacts) {
      const Vec3<T> x = q.template segment<3>(3 * c.vertex);
      const auto g = evaluate_gap<T>(obstacles_[c.obstacle], x, t);
      const T lambda = contact_magnitude(g.d, penalty_.delta, penalty_.kappa);
      f.template segment<3>(3 * c.vertex) += (scale * lambda) * g.n;
    }
  }

  /// Triplets of scale * d f_c / d q.
  void add_force_jacobian(const std::vector<ContactPoint>& contacts, const Eigen::VectorXd& q, double t,
                          double scale, std::vector<Eigen::Triplet<double>>& out) const;

 private:
  std::vector<Obstacle> obstacles_;
  std::vector<int> surface_vertices_;
  PenaltyParams penalty_;
};

/// Gaps of a contact list (convenience for tests and reporting).
std::vector<double> gaps(const ContactModel& model, const std::vector<ContactPoint>& contacts,
                         const Eigen::VectorXd& q, double t);

/// Sliding-basis operator T (num_dofs x 2n): column pair i holds the tangent
/// pair of contact i at its vertex rows.
Eigen::SparseMatrix<double> sliding_basis(const ContactSet& set, int num_dofs);

/// Stiffening decision after a trial step.
struct StiffenDecision {
  bool retry = false;
  double new_kappa = 0.0;
  double factor = 1.0;
};

/// If d_deepest <= 0 the stiffness is scaled by b'(d_deepest)/b'(delta/2) and
/// the step must be retried. Throws Error(Solver) when the new stiffness would
/// exceed kappa_max.
StiffenDecision adaptive_stiffen(double deepest_gap, const PenaltyParams& penalty);

/// Stiffness at which a contact sitting at delta/2 carries `vertex_weight` newtons.
double initial_kappa(double vertex_weight, double delta);

}  // namespace fricsim
