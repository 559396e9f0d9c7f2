#include "fricsim/forces.hpp"

#include <limits>

#include "fricsim/error.hpp"

namespace fricsim {

ForceModel::ForceModel(const TetMesh& mesh, const Eigen::Vector3d& gravity, ContactModel contact,
                       std::vector<VolumePenalty> volumes)
    : mass_(build_lumped_mass(mesh)),
      gravity_(gravity),
      elastic_(mesh),
      contact_(std::move(contact)),
      volumes_(std::move(volumes)) {
  gravity_force_.resize(mass_.size());
  for (int i = 0; i < mesh.num_vertices(); ++i) gravity_force_.segment<3>(3 * i) = mass_[3 * i] * gravity_;
}

Eigen::VectorXd ForceModel::net_force(const std::vector<ContactPoint>& contacts, const Eigen::VectorXd& q,
                                      const Eigen::VectorXd& v, double t, const FrictionSource& source) const {
  if (!q.allFinite() || !v.allFinite()) throw Error(ErrorCategory::Domain, "net_force: non-finite state");
  Eigen::VectorXd f = Eigen::VectorXd::Zero(q.size());
  if (!add_non_contact<double>(q, v, f))
    throw Error(ErrorCategory::Domain, "net_force: inverted element or non-positive enclosed volume");
  add_contact<double>(contacts, q, v, t, source, f);
  return f;
}

bool ForceModel::add_non_contact_jacobian(const Eigen::VectorXd& q, const Eigen::VectorXd& v, double a_q,
                                          double a_v, std::vector<Eigen::Triplet<double>>& out,
                                          std::vector<RankOneTerm>* rank_one) const {
  // d f_e/dq = -K.
  if (a_q != 0.0 && !elastic_.add_stiffness_triplets(q, -a_q, out)) return false;
  if (elastic_.has_damping()) {
    if (a_v != 0.0 && !elastic_.add_damping_velocity_triplets(q, a_v, out)) return false;
    if (a_q != 0.0 && !elastic_.add_damping_position_triplets(q, v, a_q, out)) return false;
  }
  if (a_q != 0.0) {
    for (const auto& vol : volumes_) {
      vol.add_sparse_jacobian(q, a_q, out);
      if (rank_one) rank_one->push_back(vol.rank_one_jacobian(q, a_q));
    }
  }
  return true;
}

void ForceModel::add_contact_jacobian(const std::vector<ContactPoint>& contacts, const Eigen::VectorXd& q,
                                      const Eigen::VectorXd& v, double t, const FrictionSource& source,
                                      double a_q, double a_v, std::vector<Eigen::Triplet<double>>& out) const {
  if (a_q != 0.0) contact_.add_force_jacobian(contacts, q, t, a_q, out);
  const FrictionModel fric = friction();
  if (!fric.active()) return;
  const Eigen::VectorXd& q_geom = source.lagged_positions ? *source.lagged_positions : q;
  if (a_v != 0.0) fric.add_velocity_jacobian(contacts, q_geom, v, t, a_v, out);
  if (a_q != 0.0 && !source.lagged_positions && !source.frozen)
    fric.add_position_jacobian(contacts, q, v, t, a_q, out);
}

EnergyBreakdown ForceModel::energies(const Eigen::VectorXd& q, const Eigen::VectorXd& v, double t) const {
  EnergyBreakdown e;
  e.kinetic = 0.5 * v.dot(mass_.cwiseProduct(v));
  e.elastic = elastic_.energy(q);
  e.penalty = contact_.energy(contact_.all_pairs(), q, t);
  e.gravity = -gravity_force_.dot(q);
  for (const auto& vol : volumes_) {
    const double V = vol.region.volume<double>(q);
    e.volume += (vol.params.model == VolumeModel::Quadratic || V > 0.0)
                    ? volume_energy(V, vol.params)
                    : std::numeric_limits<double>::infinity();
  }
  return e;
}

Eigen::Vector3d ForceModel::centroid(const Eigen::VectorXd& q) const {
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  double total = 0.0;
  for (Eigen::Index i = 0; i < q.size() / 3; ++i) {
    sum += mass_[3 * i] * q.segment<3>(3 * i);
    total += mass_[3 * i];
  }
  return sum / total;
}

}  // namespace fricsim
