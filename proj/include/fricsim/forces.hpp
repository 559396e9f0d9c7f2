#pragma once

// Net force f = f_e + f_d + f_c + f_f + f_v + M g, split into a non-contact
// part (elastic, damping, volume, gravity) and a contact part (penalty
// contact and friction), evaluated generically over the scalar type.

#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "fricsim/contact.hpp"
#include "fricsim/dual.hpp"
#include "fricsim/elasticity.hpp"
#include "fricsim/friction.hpp"
#include "fricsim/mesh.hpp"
#include "fricsim/volume.hpp"

namespace fricsim {

/// Where friction takes its sliding basis and contact magnitudes from.
struct FrictionSource {
  const Eigen::VectorXd* lagged_positions = nullptr;  // null: the evaluated q itself
  bool frozen = false;                                // FrozenBasis derivatives
};

/// Energies of a state, in joules.
struct EnergyBreakdown {
  double kinetic = 0.0;
  double elastic = 0.0;
  double penalty = 0.0;
  double gravity = 0.0;
  double volume = 0.0;

  double total() const { return kinetic + elastic + penalty + gravity + volume; }
};

class ForceModel {
 public:
  ForceModel(const TetMesh& mesh, const Eigen::Vector3d& gravity, ContactModel contact,
             std::vector<VolumePenalty> volumes);

  int num_dofs() const { return static_cast<int>(mass_.size()); }
  const Eigen::VectorXd& mass() const { return mass_; }
  const Eigen::VectorXd& gravity_force() const { return gravity_force_; }
  const Eigen::Vector3d& gravity() const { return gravity_; }
  const ElasticModel& elastic() const { return elastic_; }
  const ContactModel& contact() const { return contact_; }
  ContactModel& contact() { return contact_; }
  FrictionModel friction() const { return FrictionModel(contact_); }
  const std::vector<VolumePenalty>& volumes() const { return volumes_; }

  /// Accumulate scale * (f_e + f_d + f_v + M g). False when infeasible
  /// (inverted element or non-positive volume under a logarithmic model).
  template <class T>
  bool add_non_contact(const Vec<T>& q, const Vec<T>& v, Vec<T>& f, double scale = 1.0) const {
    if (!elastic_.add_force<T>(q, f, scale)) return false;
    if (!elastic_.add_damping_force<T>(q, v, f, scale)) return false;
    for (const auto& vol : volumes_)
      if (!vol.add_force<T>(q, f, scale)) return false;
    f += (scale * gravity_force_).template cast<T>();
    return true;
  }

  /// Accumulate scale * (f_c + f_f) over the given contacts with obstacles at time t.
  template <class T>
  void add_contact(const std::vector<ContactPoint>& contacts, const Vec<T>& q, const Vec<T>& v, double t,
                   const FrictionSource& source, Vec<T>& f, double scale = 1.0) const {
    contact_.add_force<T>(contacts, q, t, f, scale);
    const FrictionModel fric = friction();
    if (!fric.active()) return;
    if (source.lagged_positions) {
      const Vec<T> q_lag = source.lagged_positions->template cast<T>();
      fric.add_force<T>(contacts, q_lag, q_lag, v, t, f, scale, false);
    } else {
      fric.add_force<T>(contacts, q, q, v, t, f, scale, source.frozen);
    }
  }

  /// Double-valued net force; throws Error(Domain) when infeasible.
  Eigen::VectorXd net_force(const std::vector<ContactPoint>& contacts, const Eigen::VectorXd& q,
                            const Eigen::VectorXd& v, double t, const FrictionSource& source = {}) const;

  /// Triplets of a_q * d(f_nc)/dq + a_v * d(f_nc)/dv, sparse volume terms
  /// only; the rank-one volume terms are appended to `rank_one` when given.
  bool add_non_contact_jacobian(const Eigen::VectorXd& q, const Eigen::VectorXd& v, double a_q, double a_v,
                                std::vector<Eigen::Triplet<double>>& out,
                                std::vector<RankOneTerm>* rank_one) const;

  /// Triplets of a_q * d(f_c + f_f)/dq + a_v * d(f_c + f_f)/dv.
  void add_contact_jacobian(const std::vector<ContactPoint>& contacts, const Eigen::VectorXd& q,
                            const Eigen::VectorXd& v, double t, const FrictionSource& source, double a_q,
                            double a_v, std::vector<Eigen::Triplet<double>>& out) const;

  EnergyBreakdown energies(const Eigen::VectorXd& q, const Eigen::VectorXd& v, double t) const;

  /// Mass-weighted centroid of all vertices.
  Eigen::Vector3d centroid(const Eigen::VectorXd& q) const;

 private:
  Eigen::VectorXd mass_;
  Eigen::Vector3d gravity_;
  Eigen::VectorXd gravity_force_;
  ElasticModel elastic_;
  ContactModel contact_;
  std::vector<VolumePenalty> volumes_;
};

}  // namespace fricsim
