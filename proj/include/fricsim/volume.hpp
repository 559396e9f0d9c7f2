#pragma once

// Enclosed volume of a closed triangle surface and volume-change penalties.

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "fricsim/dual.hpp"
#include "fricsim/mesh.hpp"

namespace fricsim {

inline constexpr double kPascalPerAtm = 101325.0;

enum class VolumeModel { IdealGas, NearlyIncompressible, Quadratic };

VolumeModel parse_volume_model(const std::string& text);
std::string to_string(VolumeModel model);

/// Penalty parameters in SI units (compression coefficient in 1/Pa).
struct VolumePenaltyParams {
  VolumeModel model = VolumeModel::Quadratic;
  double compressibility = 1.0 / kPascalPerAtm;  // kappa_v, 1/Pa
  double initial_pressure = kPascalPerAtm;       // P0, Pa
  double rest_volume = 1.0;                      // V0, m^3

  void validate() const;
};

/// W(V). Returns +inf for V <= 0 under the logarithmic models.
template <class T>
T volume_energy(const T& V, const VolumePenaltyParams& p) {
  using std::log1p;
  const double V0 = p.rest_volume;
  const T rel = (V - V0) / V0;
  switch (p.model) {
    case VolumeModel::IdealGas:
      if (!(V > 0.0)) return T(std::numeric_limits<double>::infinity());
      return p.initial_pressure * (V - V0 - V0 * log1p(rel));
    case VolumeModel::NearlyIncompressible:
      if (!(V > 0.0)) return T(std::numeric_limits<double>::infinity());
      return (V0 - V + V * log1p(rel)) / p.compressibility;
    case VolumeModel::Quadratic:
      break;
  }
  return (V - V0) * (V - V0) / (2.0 * V0 * p.compressibility);
}

/// dW/dV.
template <class T>
T volume_energy_slope(const T& V, const VolumePenaltyParams& p) {
  using std::log1p;
  const double V0 = p.rest_volume;
  switch (p.model) {
    case VolumeModel::IdealGas:
      return p.initial_pressure * ((V - V0) / V);
    case VolumeModel::NearlyIncompressible:
      return log1p((V - V0) / V0) / p.compressibility;
    case VolumeModel::Quadratic:
      break;
  }
  return (V - V0) / (V0 * p.compressibility);
}

/// d^2W/dV^2.
double volume_energy_curvature(double V, const VolumePenaltyParams& p);

/// A closed, consistently oriented triangle surface.
class VolumeRegion {
 public:
  /// Throws Error(Mesh) when the triangle set is not closed and consistently oriented.
  VolumeRegion(std::string name, std::vector<Tri> tris);

  const std::string& name() const { return name_; }
  const std::vector<Tri>& tris() const { return tris_; }

  template <class T>
  T volume(const Vec<T>& q) const {
    T total(0.0);
    for (const auto& t : tris_) {
      const Vec3<T> a = q.template segment<3>(3 * t[0]);
      const Vec3<T> b = q.template segment<3>(3 * t[1]);
      const Vec3<T> c = q.template segment<3>(3 * t[2]);
      total += a.dot(b.cross(c));
    }
    return total / 6.0;
  }

  /// Accumulate scale * dV/dq into out.
  template <class T>
  void add_gradient(const Vec<T>& q, Vec<T>& out, const T& scale) const {
    for (const auto& t : tris_) {
      const Vec3<T> a = q.template segment<3>(3 * t[0]);
      const Vec3<T> b = q.template segment<3>(3 * t[1]);
      const Vec3<T> c = q.template segment<3>(3 * t[2]);
      const T w = scale / 6.0;
      out.template segment<3>(3 * t[0]) += w * b.cross(c);
      out.template segment<3>(3 * t[1]) += w * c.cross(a);
      out.template segment<3>(3 * t[2]) += w * a.cross(b);
    }
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& q) const;

  /// Triplets of scale * d^2V/dq^2.
  void add_hessian(const Eigen::VectorXd& q, double scale, std::vector<Eigen::Triplet<double>>& out) const;

 private:
  std::string name_;
  std::vector<Tri> tris_;
};

/// Rank-one matrix coefficient * left * right^T.
struct RankOneTerm {
  double coefficient = 0.0;
  Eigen::VectorXd left;
  Eigen::VectorXd right;

  Eigen::VectorXd apply(const Eigen::VectorXd& p) const { return (coefficient * right.dot(p)) * left; }
};

struct VolumePenalty {
  VolumeRegion region;
  VolumePenaltyParams params;

  double energy(const Eigen::VectorXd& q) const;

  /// -W'(V) dV/dq. Throws Error(Domain) for V <= 0 under logarithmic models,
  /// recommending the quadratic model or a smaller time step.
  Eigen::VectorXd force(const Eigen::VectorXd& q) const;

  /// Accumulate scale * force into f. Returns false when V <= 0 under a logarithmic model.
  template <class T>
  bool add_force(const Vec<T>& q, Vec<T>& f, double scale = 1.0) const {
    const T V = region.volume<T>(q);
    if (params.model != VolumeModel::Quadratic && !(V > 0.0)) return false;
    region.add_gradient<T>(q, f, -scale * volume_energy_slope<T>(V, params));
    return true;
  }

  /// Triplets of the sparse part scale * (-W'(V) d^2V/dq^2).
  void add_sparse_jacobian(const Eigen::VectorXd& q, double scale, std::vector<Eigen::Triplet<double>>& out) const;

  /// Dense rank-one part scale * (-W''(V) dV/dq dV/dq^T).
  RankOneTerm rank_one_jacobian(const Eigen::VectorXd& q, double scale) const;

  /// Full force Jacobian applied to p, matrix-free:
  /// -(W'(V) d^2V/dq^2 p + W''(V) dV/dq (dV/dq . p)).
  Eigen::VectorXd jacobian_apply(const Eigen::VectorXd& q, const Eigen::VectorXd& p) const;

  /// Same product with the rank-one term dropped.
  Eigen::VectorXd sparse_jacobian_apply(const Eigen::VectorXd& q, const Eigen::VectorXd& p) const;
};

}  // namespace fricsim
