#include "fricsim/contact.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include "fricsim/error.hpp"

namespace fricsim {
namespace {

[[noreturn]] void domain_error(const std::string& field, const std::string& why) {
  throw Error(ErrorCategory::Domain, field + ": " + why);
}

}  // namespace

std::string FrictionParams::validate() const {
  if (!(mu_dynamic >= 0.0)) domain_error("mu_dynamic", "must be >= 0");
  if (!(mu_static >= mu_dynamic)) domain_error("mu_static", "must be >= mu_dynamic");
  if (!(mu_viscous >= 0.0)) domain_error("mu_viscous", "must be >= 0");
  if (!(epsilon > 0.0)) domain_error("epsilon", "must be > 0");
  if (!(stribeck_velocity > 0.0)) domain_error("stribeck_velocity", "must be > 0");
  if (stribeck_velocity < epsilon)
    return "stribeck_velocity below epsilon lowers the effective static friction";
  return {};
}

Eigen::Vector3d ObstacleMotion::offset(double t) const {
  if (keyframes.empty()) return Eigen::Vector3d::Zero();
  if (t <= keyframes.front().time) return keyframes.front().offset;
  if (t >= keyframes.back().time) return keyframes.back().offset;
  auto it = std::upper_bound(keyframes.begin(), keyframes.end(), t,
                             [](double tt, const Keyframe& k) { return tt < k.time; });
  const Keyframe& b = *it;
  const Keyframe& a = *(it - 1);
  const double s = (t - a.time) / (b.time - a.time);
  return (1.0 - s) * a.offset + s * b.offset;
}

Eigen::Vector3d ObstacleMotion::linear_velocity(double t) const {
  if (keyframes.size() < 2 || t <= keyframes.front().time || t > keyframes.back().time)
    return Eigen::Vector3d::Zero();
  // First keyframe with time >= t closes the segment containing t from the left.
  auto it = std::lower_bound(keyframes.begin(), keyframes.end(), t,
                             [](const Keyframe& k, double tt) { return k.time < tt; });
  const Keyframe& b = *it;
  const Keyframe& a = *(it - 1);
  return (b.offset - a.offset) / (b.time - a.time);
}

Eigen::Matrix3d ObstacleMotion::rotation(double t) const {
  const double rate = angular_velocity.norm();
  if (rate == 0.0) return Eigen::Matrix3d::Identity();
  return Eigen::AngleAxisd(rate * t, angular_velocity / rate).toRotationMatrix();
}

bool ObstacleMotion::is_static() const {
  if (angular_velocity.squaredNorm() > 0.0) return false;
  for (const auto& k : keyframes)
    if (k.offset != keyframes.front().offset) return false;
  return true;
}

void Obstacle::validate() const {
  const std::string prefix = "obstacles." + name + ".";
  if (kind == ObstacleKind::HalfSpace && std::abs(normal.norm() - 1.0) > 1e-9)
    domain_error(prefix + "normal", "must be unit length");
  if (kind == ObstacleKind::Sphere && !(radius > 0.0)) domain_error(prefix + "radius", "must be > 0");
  for (size_t i = 1; i < motion.keyframes.size(); ++i)
    if (!(motion.keyframes[i].time > motion.keyframes[i - 1].time))
      domain_error(prefix + "keyframes", "times must be strictly increasing");
  friction.validate();
}

void PenaltyParams::validate() const {
  if (!(delta > 0.0)) domain_error("contact.delta", "must be > 0");
  if (!(kappa > 0.0)) domain_error("contact.kappa", "must be > 0");
  if (!(kappa <= kappa_max)) domain_error("contact.kappa_max", "must be >= kappa");
}

Eigen::Matrix3d gap_normal_derivative(const Obstacle& ob, const Eigen::Vector3d& x, double t) {
  if (ob.kind == ObstacleKind::HalfSpace) return Eigen::Matrix3d::Zero();
  const Eigen::Vector3d r = x - (ob.point + ob.motion.offset(t));
  const double rho = r.norm();
  if (!(rho > 0.0)) return Eigen::Matrix3d::Zero();
  const Eigen::Vector3d u = r / rho;
  const double sign = ob.inside ? -1.0 : 1.0;
  return (sign / rho) * (Eigen::Matrix3d::Identity() - u * u.transpose());
}

ContactModel::ContactModel(std::vector<Obstacle> obstacles, std::vector<int> surface_vertices,
                           PenaltyParams penalty)
    : obstacles_(std::move(obstacles)), surface_vertices_(std::move(surface_vertices)), penalty_(penalty) {}

std::vector<ContactPoint> ContactModel::candidates(const std::vector<const Eigen::VectorXd*>& configs,
                                                   double t, double threshold) const {
  std::vector<ContactPoint> out;
  for (int v : surface_vertices_) {
    for (int o = 0; o < static_cast<int>(obstacles_.size()); ++o) {
      for (const auto* q : configs) {
        const Eigen::Vector3d x = q->segment<3>(3 * v);
        if (evaluate_gap<double>(obstacles_[o], x, t).d < threshold) {
          out.push_back({v, o});
          break;
        }
      }
    }
  }
  return out;
}

std::vector<ContactPoint> ContactModel::all_pairs() const {
  std::vector<ContactPoint> out;
  for (int v : surface_vertices_)
    for (int o = 0; o < static_cast<int>(obstacles_.size()); ++o) out.push_back({v, o});
  return out;
}

ContactSet ContactModel::evaluate(const std::vector<ContactPoint>& contacts, const Eigen::VectorXd& q,
                                  double t) const {
  ContactSet set;
  set.contacts = contacts;
  for (const auto& c : contacts) {
    const Eigen::Vector3d x = q.segment<3>(3 * c.vertex);
    const auto& ob = obstacles_[c.obstacle];
    const auto g = evaluate_gap<double>(ob, x, t);
    set.gap.push_back(g.d);
    set.magnitude.push_back(contact_magnitude(g.d, penalty_.delta, penalty_.kappa));
    set.normal.push_back(g.n);
    set.tangents.push_back(tangent_basis<double>(g.n));
    set.obstacle_velocity.push_back(ob.surface_velocity<double>(x, t));
  }
  return set;
}

double ContactModel::deepest_gap(const Eigen::VectorXd& q, double t) const {
  double deepest = std::numeric_limits<double>::infinity();
  for (int v : surface_vertices_)
    for (const auto& ob : obstacles_)
      deepest = std::min(deepest, evaluate_gap<double>(ob, Eigen::Vector3d(q.segment<3>(3 * v)), t).d);
  return deepest;
}

double ContactModel::energy(const std::vector<ContactPoint>& contacts, const Eigen::VectorXd& q,
                            double t) const {
  double total = 0.0;
  for (const auto& c : contacts) {
    const Eigen::Vector3d x = q.segment<3>(3 * c.vertex);
    total += penalty_b(evaluate_gap<double>(obstacles_[c.obstacle], x, t).d, penalty_.delta, penalty_.kappa);
  }
  return total;
}

void ContactModel::add_force_jacobian(const std::vector<ContactPoint>& contacts, const Eigen::VectorXd& q,
                                      double t, double scale,
                                      std::vector<Eigen::Triplet<double>>& out) const {
  for (const auto& c : contacts) {
    const Eigen::Vector3d x = q.segment<3>(3 * c.vertex);
    const auto& ob = obstacles_[c.obstacle];
    const auto g = evaluate_gap<double>(ob, x, t);
    if (!(g.d < penalty_.delta)) continue;
    const double lambda = contact_magnitude(g.d, penalty_.delta, penalty_.kappa);
    const double dlambda = -penalty_d2b(g.d, penalty_.delta, penalty_.kappa);
    const Eigen::Matrix3d block = dlambda * g.n * g.n.transpose() + lambda * gap_normal_derivative(ob, x, t);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) out.emplace_back(3 * c.vertex + i, 3 * c.vertex + j, scale * block(i, j));
  }
}

std::vector<double> gaps(const ContactModel& model, const std::vector<ContactPoint>& contacts,
                         const Eigen::VectorXd& q, double t) {
  return model.evaluate(contacts, q, t).gap;
}

Eigen::SparseMatrix<double> sliding_basis(const ContactSet& set, int num_dofs) {
  std::vector<Eigen::Triplet<double>> trips;
  for (int i = 0; i < set.size(); ++i) {
    const int row = 3 * set.contacts[i].vertex;
    for (int k = 0; k < 2; ++k)
      for (int r = 0; r < 3; ++r) trips.emplace_back(row + r, 2 * i + k, set.tangents[i](r, k));
  }
  Eigen::SparseMatrix<double> T(num_dofs, 2 * set.size());
  T.setFromTriplets(trips.begin(), trips.end());
  return T;
}

StiffenDecision adaptive_stiffen(double deepest_gap, const PenaltyParams& penalty) {
  StiffenDecision out;
  out.new_kappa = penalty.kappa;
  if (deepest_gap > 0.0) return out;
  const double delta = penalty.delta;
  out.factor = penalty_db(deepest_gap, delta, 1.0) / penalty_db(0.5 * delta, delta, 1.0);
  out.new_kappa = penalty.kappa * out.factor;
  out.retry = true;
  if (!(out.new_kappa <= penalty.kappa_max)) {
    std::ostringstream msg;
    msg << "contact stiffness " << out.new_kappa << " would exceed kappa_max " << penalty.kappa_max
        << " (deepest gap " << deepest_gap << "); reduce the time step";
    throw Error(ErrorCategory::Solver, msg.str());
  }
  return out;
}

double initial_kappa(double vertex_weight, double delta) { return vertex_weight / (0.75 * delta); }

}  // namespace fricsim
