#include "fricsim/volume.hpp"

#include <map>
#include <sstream>

#include "fricsim/error.hpp"

namespace fricsim {
namespace {

Eigen::Matrix3d cross_matrix(const Eigen::Vector3d& w) {
  Eigen::Matrix3d m;
  m << 0.0, -w.z(), w.y(), w.z(), 0.0, -w.x(), -w.y(), w.x(), 0.0;
  return m;
}

void require_positive_volume(double V, const VolumePenaltyParams& p) {
  if (p.model != VolumeModel::Quadratic && !(V > 0.0)) {
    std::ostringstream msg;
    msg << "enclosed volume " << V << " is not positive under the " << to_string(p.model)
        << " model; use the quadratic model or a smaller time step";
    throw Error(ErrorCategory::Domain, msg.str());
  }
}

}  // namespace

VolumeModel parse_volume_model(const std::string& text) {
  if (text == "ideal_gas") return VolumeModel::IdealGas;
  if (text == "nearly_incompressible") return VolumeModel::NearlyIncompressible;
  if (text == "quadratic") return VolumeModel::Quadratic;
  throw Error(ErrorCategory::Config,
              "volume model: expected ideal_gas, nearly_incompressible or quadratic, got \"" + text + "\"");
}

std::string to_string(VolumeModel model) {
  switch (model) {
    case VolumeModel::IdealGas: return "ideal_gas";
    case VolumeModel::NearlyIncompressible: return "nearly_incompressible";
    case VolumeModel::Quadratic: return "quadratic";
  }
  return "quadratic";
}

void VolumePenaltyParams::validate() const {
  if (!(compressibility > 0.0)) throw Error(ErrorCategory::Domain, "compressibility: must be > 0");
  if (!(initial_pressure > 0.0)) throw Error(ErrorCategory::Domain, "initial_pressure: must be > 0");
  if (!(rest_volume > 0.0)) throw Error(ErrorCategory::Domain, "rest_volume: must be > 0");
}

double volume_energy_curvature(double V, const VolumePenaltyParams& p) {
  switch (p.model) {
    case VolumeModel::IdealGas:
      return p.initial_pressure * p.rest_volume / (V * V);
    case VolumeModel::NearlyIncompressible:
      return 1.0 / (p.compressibility * V);
    case VolumeModel::Quadratic:
      break;
  }
  return 1.0 / (p.rest_volume * p.compressibility);
}

VolumeRegion::VolumeRegion(std::string name, std::vector<Tri> tris) : name_(std::move(name)), tris_(std::move(tris)) {
  if (tris_.empty()) throw Error(ErrorCategory::Mesh, "volume region '" + name_ + "' has no triangles");
  // Every directed edge must be matched by its reverse exactly once.
  std::map<std::pair<int, int>, int> directed;
  for (const auto& t : tris_)
    for (int k = 0; k < 3; ++k) ++directed[{t[k], t[(k + 1) % 3]}];
  for (const auto& [edge, count] : directed) {
    auto rev = directed.find({edge.second, edge.first});
    if (count != 1 || rev == directed.end() || rev->second != 1) {
      std::ostringstream msg;
      msg << "volume region '" << name_ << "' is not closed and consistently oriented (edge " << edge.first
          << "-" << edge.second << ")";
      throw Error(ErrorCategory::Mesh, msg.str());
    }
  }
}

Eigen::VectorXd VolumeRegion::gradient(const Eigen::VectorXd& q) const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(q.size());
  add_gradient<double>(q, g, 1.0);
  return g;
}

void VolumeRegion::add_hessian(const Eigen::VectorXd& q, double scale,
                               std::vector<Eigen::Triplet<double>>& out) const {
  auto put = [&](int row_vertex, int col_vertex, const Eigen::Matrix3d& block) {
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        out.emplace_back(3 * row_vertex + i, 3 * col_vertex + j, scale * block(i, j) / 6.0);
  };
  for (const auto& t : tris_) {
    const Eigen::Vector3d a = q.segment<3>(3 * t[0]);
    const Eigen::Vector3d b = q.segment<3>(3 * t[1]);
    const Eigen::Vector3d c = q.segment<3>(3 * t[2]);
    // d/db (b x c) = -[c]x, d/dc (b x c) = [b]x, and cyclically.
    put(t[0], t[1], -cross_matrix(c));
    put(t[0], t[2], cross_matrix(b));
    put(t[1], t[2], -cross_matrix(a));
    put(t[1], t[0], cross_matrix(c));
    put(t[2], t[0], -cross_matrix(b));
    put(t[2], t[1], cross_matrix(a));
  }
}

double VolumePenalty::energy(const Eigen::VectorXd& q) const {
  const double V = region.volume<double>(q);
  require_positive_volume(V, params);
  return volume_energy(V, params);
}

Eigen::VectorXd VolumePenalty::force(const Eigen::VectorXd& q) const {
  require_positive_volume(region.volume<double>(q), params);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(q.size());
  add_force<double>(q, f);
  return f;
}

void VolumePenalty::add_sparse_jacobian(const Eigen::VectorXd& q, double scale,
                                        std::vector<Eigen::Triplet<double>>& out) const {
  const double V = region.volume<double>(q);
  region.add_hessian(q, -scale * volume_energy_slope(V, params), out);
}

RankOneTerm VolumePenalty::rank_one_jacobian(const Eigen::VectorXd& q, double scale) const {
  const double V = region.volume<double>(q);
  Eigen::VectorXd g = region.gradient(q);
  return {-scale * volume_energy_curvature(V, params), g, g};
}

Eigen::VectorXd VolumePenalty::jacobian_apply(const Eigen::VectorXd& q, const Eigen::VectorXd& p) const {
  const RankOneTerm rank_one = rank_one_jacobian(q, 1.0);
  return sparse_jacobian_apply(q, p) + rank_one.apply(p);
}

Eigen::VectorXd VolumePenalty::sparse_jacobian_apply(const Eigen::VectorXd& q, const Eigen::VectorXd& p) const {
  std::vector<Eigen::Triplet<double>> trips;
  add_sparse_jacobian(q, 1.0, trips);
  Eigen::SparseMatrix<double> H(q.size(), q.size());
  H.setFromTriplets(trips.begin(), trips.end());
  return H * p;
}

}  // namespace fricsim
