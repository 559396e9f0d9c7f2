#include "fricsim/friction.hpp"

#include <algorithm>
#include <charconv>

#include "fricsim/error.hpp"

namespace fricsim {
namespace {

Eigen::Matrix3d cross_matrix(const Eigen::Vector3d& w) {
  Eigen::Matrix3d m;
  m << 0.0, -w.z(), w.y(), w.z(), 0.0, -w.x(), -w.y(), w.x(), 0.0;
  return m;
}

void add_block(int vertex, const Eigen::Matrix3d& block, double scale,
               std::vector<Eigen::Triplet<double>>& out) {
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out.emplace_back(3 * vertex + i, 3 * vertex + j, scale * block(i, j));
}

}  // namespace

FrictionMode FrictionMode::parse(const std::string& text) {
  FrictionMode mode;
  if (text == "implicit") return mode;
  const std::string prefix = "lagged:";
  if (text.rfind(prefix, 0) == 0) {
    int iters = 0;
    const char* first = text.data() + prefix.size();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, iters);
    if (ec == std::errc() && ptr == last && iters >= 1) {
      mode.lagged = true;
      mode.fixed_point_iters = iters;
      return mode;
    }
  }
  throw Error(ErrorCategory::Config, "friction_mode: expected \"implicit\" or \"lagged:N\" (N >= 1), got \"" +
                                         text + "\"");
}

std::string FrictionMode::to_string() const {
  return lagged ? "lagged:" + std::to_string(fixed_point_iters) : "implicit";
}

bool FrictionModel::active() const {
  return std::any_of(contact_->obstacles().begin(), contact_->obstacles().end(),
                     [](const Obstacle& o) { return o.friction.active(); });
}

Eigen::VectorXd FrictionModel::force(const std::vector<ContactPoint>& contacts, const Eigen::VectorXd& q_basis,
                                     const Eigen::VectorXd& q_contact, const Eigen::VectorXd& v,
                                     double t) const {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(v.size());
  add_force<double>(contacts, q_basis, q_contact, v, t, f);
  return f;
}

FrictionModel::LocalJacobians FrictionModel::local_jacobians(const ContactPoint& c, const Eigen::VectorXd& q,
                                                             const Eigen::VectorXd& v, double t) const {
  LocalJacobians out;
  const auto& ob = contact_->obstacles()[c.obstacle];
  const FrictionParams& p = ob.friction;
  if (!p.active()) return out;
  const Eigen::Vector3d x = q.segment<3>(3 * c.vertex);
  const auto g = evaluate_gap<double>(ob, x, t);
  const double delta = contact_->delta();
  const double kappa = contact_->kappa();
  const double lambda = contact_magnitude(g.d, delta, kappa);
  if (!(lambda > 0.0)) return out;
  const double dlambda = -penalty_d2b(g.d, delta, kappa);

  const Eigen::Vector3d& n = g.n;
  const Eigen::Matrix3d P = Eigen::Matrix3d::Identity() - n * n.transpose();
  const Eigen::Vector3d u = Eigen::Vector3d(v.segment<3>(3 * c.vertex)) - ob.surface_velocity<double>(x, t);
  const Eigen::Vector3d tang = P * u;
  const double s = tang.norm();

  const double coeff = friction_coefficient(s, p);
  const double ratio_s = smooth_s_over_speed(s, p.epsilon);
  const double phi = coeff * ratio_s * lambda + p.mu_viscous;
  const double dratio_s = s < p.epsilon ? -1.0 / (p.epsilon * p.epsilon) : -1.0 / (s * s);
  const double dcoeff =
      (p.mu_static - p.mu_dynamic) * stribeck_g_derivative(s / p.stribeck_velocity) / p.stribeck_velocity;
  const double dphi = (dcoeff * ratio_s + coeff * dratio_s) * lambda;

  // f = -phi(|t|) t, t = P u.
  Eigen::Matrix3d df_dt = -phi * Eigen::Matrix3d::Identity();
  if (s > 0.0) df_dt -= (dphi / s) * tang * tang.transpose();
  out.dv = df_dt * P;

  const Eigen::Matrix3d N = gap_normal_derivative(ob, x, t);
  const Eigen::Matrix3d omega = cross_matrix(ob.motion.angular_velocity);
  const Eigen::Matrix3d dt_dx = -P * omega - n.dot(u) * N - n * (N * u).transpose();
  const Eigen::Vector3d df_dlambda = -coeff * ratio_s * tang;
  out.dx = df_dt * dt_dx + df_dlambda * (dlambda * n).transpose();
  return out;
}

void FrictionModel::add_velocity_jacobian(const std::vector<ContactPoint>& contacts, const Eigen::VectorXd& q_geom,
                                          const Eigen::VectorXd& v, double t, double scale,
                                          std::vector<Eigen::Triplet<double>>& out) const {
  for (const auto& c : contacts) add_block(c.vertex, local_jacobians(c, q_geom, v, t).dv, scale, out);
}

void FrictionModel::add_position_jacobian(const std::vector<ContactPoint>& contacts, const Eigen::VectorXd& q,
                                          const Eigen::VectorXd& v, double t, double scale,
                                          std::vector<Eigen::Triplet<double>>& out) const {
  for (const auto& c : contacts) add_block(c.vertex, local_jacobians(c, q, v, t).dx, scale, out);
}

double FrictionModel::max_sliding_speed(const std::vector<ContactPoint>& contacts, const Eigen::VectorXd& q,
                                        const Eigen::VectorXd& v, double t) const {
  double fastest = 0.0;
  for (const auto& c : contacts) {
    const auto& ob = contact_->obstacles()[c.obstacle];
    const Eigen::Vector3d x = q.segment<3>(3 * c.vertex);
    const auto g = evaluate_gap<double>(ob, x, t);
    if (!(contact_magnitude(g.d, contact_->delta(), contact_->kappa()) > 0.0)) continue;
    const Eigen::Vector3d u = Eigen::Vector3d(v.segment<3>(3 * c.vertex)) - ob.surface_velocity<double>(x, t);
    fastest = std::max(fastest, (u - g.n * g.n.dot(u)).norm());
  }
  return fastest;
}

}  // namespace fricsim
