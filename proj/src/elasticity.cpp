#include "fricsim/elasticity.hpp"

#include <sstream>

#include "fricsim/error.hpp"

namespace fricsim {
namespace {

void require_finite(const Eigen::VectorXd& x, const char* what) {
  if (!x.allFinite()) throw Error(ErrorCategory::Domain, std::string(what) + ": non-finite input");
}

void add_block(const Tet& tet, const Eigen::Matrix<double, 12, 12>& block, double scale, Triplets& out) {
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          out.emplace_back(3 * tet[a] + i, 3 * tet[b] + j, scale * block(3 * a + i, 3 * b + j));
}

}  // namespace

ElasticModel::ElasticModel(const TetMesh& mesh) : num_dofs_(mesh.num_dofs()) {
  elements_.reserve(mesh.tets.size());
  for (int t = 0; t < mesh.num_tets(); ++t) {
    const auto& tet = mesh.tets[t];
    const auto& mat = mesh.material_of(t);
    Eigen::Matrix3d Dm;
    for (int j = 0; j < 3; ++j) Dm.col(j) = mesh.rest_positions[tet[j + 1]] - mesh.rest_positions[tet[0]];
    const double vol = Dm.determinant() / 6.0;
    if (!(vol > 0.0)) {
      std::ostringstream msg;
      msg << "tet " << t << " has non-positive rest volume " << vol;
      throw Error(ErrorCategory::Mesh, msg.str());
    }
    ElasticElement e;
    e.vertices = tet;
    e.dm_inv = Dm.inverse();
    e.volume = vol;
    e.mu = mat.mu();
    e.lambda = mat.lambda();
    e.alpha = mat.rayleigh_alpha;
    e.beta = mat.rayleigh_beta;
    e.vertex_mass = mat.density * vol / 4.0;
    has_alpha_ = has_alpha_ || e.alpha > 0.0;
    has_beta_ = has_beta_ || e.beta > 0.0;
    elements_.push_back(e);
  }
}

double ElasticModel::energy(const Eigen::VectorXd& q) const {
  require_finite(q, "elastic_energy");
  double total = 0.0;
  for (const auto& e : elements_) {
    const Eigen::Matrix3d F = shape_matrix<double>(gather(q, e.vertices)) * e.dm_inv;
    total += e.volume * neo_hookean_density(F, e.mu, e.lambda);
  }
  return total;
}

Eigen::VectorXd ElasticModel::force(const Eigen::VectorXd& q) const {
  require_finite(q, "elastic_force");
  Eigen::VectorXd f = Eigen::VectorXd::Zero(q.size());
  if (!add_force<double>(q, f)) throw Error(ErrorCategory::Domain, "elastic_force: inverted element");
  return f;
}

SparseMatrix ElasticModel::stiffness(const Eigen::VectorXd& q) const {
  require_finite(q, "stiffness_matrix");
  Triplets trips;
  if (!add_stiffness_triplets(q, 1.0, trips))
    throw Error(ErrorCategory::Domain, "stiffness_matrix: inverted element");
  SparseMatrix K(q.size(), q.size());
  K.setFromTriplets(trips.begin(), trips.end());
  return K;
}

Eigen::VectorXd ElasticModel::damping_force(const Eigen::VectorXd& q, const Eigen::VectorXd& v) const {
  require_finite(q, "damping_force");
  require_finite(v, "damping_force");
  Eigen::VectorXd f = Eigen::VectorXd::Zero(q.size());
  if (!add_damping_force<double>(q, v, f)) throw Error(ErrorCategory::Domain, "damping_force: inverted element");
  return f;
}

Eigen::Matrix<double, 12, 12> element_hessian(const ElasticElement& e,
                                              const Eigen::Matrix<double, 12, 1>& xe) {
  Eigen::Matrix<double, 12, 12> H;
  Eigen::Matrix<double, 12, 1> col;
  for (int j = 0; j < 12; ++j) {
    const Eigen::Matrix<double, 12, 1> dir = Eigen::Matrix<double, 12, 1>::Unit(j);
    if (!element_hessian_product<double>(e, xe, dir, col)) {
      H.setConstant(std::numeric_limits<double>::quiet_NaN());
      return H;
    }
    H.col(j) = col;
  }
  return H;
}

bool ElasticModel::add_stiffness_triplets(const Eigen::VectorXd& q, double scale, Triplets& out) const {
  for (const auto& e : elements_) {
    const auto H = element_hessian(e, gather(q, e.vertices));
    if (!H.allFinite()) return false;
    add_block(e.vertices, H, scale, out);
  }
  return true;
}

bool ElasticModel::add_damping_velocity_triplets(const Eigen::VectorXd& q, double scale,
                                                 Triplets& out) const {
  for (const auto& e : elements_) {
    Eigen::Matrix<double, 12, 12> D = (e.alpha * e.vertex_mass) * Eigen::Matrix<double, 12, 12>::Identity();
    if (e.beta > 0.0) {
      const auto H = element_hessian(e, gather(q, e.vertices));
      if (!H.allFinite()) return false;
      D += e.beta * H;
    }
    add_block(e.vertices, D, -scale, out);
  }
  return true;
}

bool ElasticModel::add_damping_position_triplets(const Eigen::VectorXd& q, const Eigen::VectorXd& v,
                                                 double scale, Triplets& out) const {
  if (!has_beta_) return true;
  for (const auto& e : elements_) {
    if (e.beta == 0.0) continue;
    const Eigen::Matrix<double, 12, 1> xe = gather(q, e.vertices);
    const Eigen::Matrix<Dual, 12, 1> ve = gather(v, e.vertices).cast<Dual>();
    Eigen::Matrix<double, 12, 12> block;
    Eigen::Matrix<Dual, 12, 1> kv;
    for (int j = 0; j < 12; ++j) {
      Eigen::Matrix<Dual, 12, 1> xd = xe.cast<Dual>();
      xd[j].eps = 1.0;
      if (!element_hessian_product<Dual>(e, xd, ve, kv)) return false;
      for (int i = 0; i < 12; ++i) block(i, j) = kv[i].eps;
    }
    add_block(e.vertices, block, -scale * e.beta, out);
  }
  return true;
}

}  // namespace fricsim
