#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <limits>

#include "fricsim/contact.hpp"
#include "fricsim/error.hpp"
#include "support.hpp"

using namespace fricsim;
using fricsim::test::Rng;

namespace {

Obstacle ground_plane() {
  Obstacle ob;
  ob.name = "ground";
  return ob;
}

Obstacle sphere(const Eigen::Vector3d& center, double radius, bool inside) {
  Obstacle ob;
  ob.name = "sphere";
  ob.kind = ObstacleKind::Sphere;
  ob.point = center;
  ob.radius = radius;
  ob.inside = inside;
  return ob;
}

/// A tilted plane with keyframed translation and spin, plus an inside and an
/// outside sphere, so every gap branch is exercised.
std::vector<Obstacle> mixed_obstacles(Rng& rng) {
  Obstacle tilted;
  tilted.name = "tilted";
  tilted.normal = Eigen::Vector3d(0.2, 1.0, -0.1).normalized();
  tilted.point = Eigen::Vector3d(0.0, -0.001, 0.0);
  tilted.motion.keyframes = {{0.0, Eigen::Vector3d::Zero()}, {1.0, rng.vec3(0.01)}};
  tilted.motion.angular_velocity = rng.vec3(0.3);
  return {tilted, sphere({0.0, 0.5, 0.0}, 0.5005, true), sphere({0.0, -0.2, 0.0}, 0.2008, false)};
}

/// Points scattered within a few delta of every obstacle in `mixed_obstacles`.
Eigen::VectorXd near_surface_points(Rng& rng, int count) {
  Eigen::VectorXd q(3 * count);
  for (int i = 0; i < count; ++i) q.segment<3>(3 * i) = Eigen::Vector3d(rng.uniform(-0.05, 0.05), rng.uniform(-0.002, 0.002),
                                                                         rng.uniform(-0.05, 0.05));
  return q;
}

std::vector<int> all_vertices(int count) {
  std::vector<int> out(count);
  for (int i = 0; i < count; ++i) out[i] = i;
  return out;
}

}  // namespace

TEST_CASE("gap examples") {
  const Obstacle ground = ground_plane();
  CHECK(evaluate_gap<double>(ground, Eigen::Vector3d(0.4, 0.3, -2.0), 0.0).d == doctest::Approx(0.3));
  CHECK(evaluate_gap<double>(ground, Eigen::Vector3d(0.0, -0.01, 0.0), 0.0).d == doctest::Approx(-0.01));
  const Obstacle ball = sphere({1.0, 2.0, 3.0}, 0.5, false);
  CHECK(evaluate_gap<double>(ball, Eigen::Vector3d(1.5, 2.0, 3.0), 0.0).d == doctest::Approx(0.0).scale(1.0));
  CHECK(evaluate_gap<double>(ball, Eigen::Vector3d(1.0, 2.7, 3.0), 0.0).d == doctest::Approx(0.2));
  const Obstacle bowl = sphere({0.0, 0.0, 0.0}, 1.0, true);
  const auto g = evaluate_gap<double>(bowl, Eigen::Vector3d(0.0, -0.9, 0.0), 0.0);
  CHECK(g.d == doctest::Approx(0.1));
  CHECK(g.n.isApprox(Eigen::Vector3d(0.0, 1.0, 0.0)));
}

TEST_CASE("penalty examples") {
  const double delta = 2e-3, kappa = 5e3;
  CHECK(penalty_b(delta, delta, kappa) == 0.0);
  CHECK(penalty_b(2.0 * delta, delta, kappa) == 0.0);
  CHECK(penalty_b(0.0, delta, kappa) == doctest::Approx(kappa * delta * delta));
  CHECK(penalty_b(-delta, delta, kappa) == doctest::Approx(8.0 * kappa * delta * delta));
  CHECK(penalty_db(delta, delta, kappa) == 0.0);
  CHECK(penalty_d2b(delta, delta, kappa) == 0.0);
  CHECK(contact_magnitude(0.0, delta, kappa) == doctest::Approx(3.0 * kappa * delta));
}

TEST_CASE("penalty derivatives match finite differences and lambda is C1 at delta") {
  Rng rng(41);
  const double delta = 1e-3, kappa = 1e4;
  for (int trial = 0; trial < 200; ++trial) {
    const double x = rng.uniform(-2.0 * delta, 2.0 * delta);
    const double s = 1e-9;
    CHECK(penalty_db(x, delta, kappa) ==
          doctest::Approx((penalty_b(x + s, delta, kappa) - penalty_b(x - s, delta, kappa)) / (2 * s)).epsilon(1e-5).scale(kappa * delta));
    CHECK(penalty_d2b(x, delta, kappa) ==
          doctest::Approx((penalty_db(x + s, delta, kappa) - penalty_db(x - s, delta, kappa)) / (2 * s)).epsilon(1e-5).scale(kappa));
    CHECK(contact_magnitude(x, delta, kappa) >= 0.0);
  }
  const double below = delta * (1.0 - 1e-8);
  CHECK(std::abs(contact_magnitude(below, delta, kappa)) < 1e-12 * kappa * delta);
  CHECK(std::abs(penalty_d2b(below, delta, kappa)) < 1e-6 * kappa);
}

TEST_CASE("contact force: zero outside the support, 3 kappa delta at d = 0") {
  const Obstacle ground = ground_plane();
  PenaltyParams penalty;
  penalty.delta = 1e-3;
  penalty.kappa = 2e4;
  const ContactModel model({ground}, {0, 1}, penalty);
  Eigen::VectorXd q(6);
  q << 0.0, 0.0015, 0.0, 0.3, 0.0, 0.1;
  const ContactSet set = model.evaluate(model.all_pairs(), q, 0.0);
  REQUIRE(set.size() == 2);
  CHECK(set.magnitude[0] == 0.0);
  CHECK(set.magnitude[1] == doctest::Approx(3.0 * penalty.kappa * penalty.delta));
  Eigen::VectorXd f = Eigen::VectorXd::Zero(6);
  model.add_force<double>(model.all_pairs(), q, 0.0, f);
  CHECK(f.head<3>().isZero(0.0));
  CHECK(f.tail<3>().isApprox(Eigen::Vector3d(0.0, 3.0 * penalty.kappa * penalty.delta, 0.0)));
}

TEST_CASE("contact frames are orthonormal and lambda is nonnegative") {
  Rng rng(42);
  const auto obstacles = mixed_obstacles(rng);
  const int count = 40;
  const ContactModel model(obstacles, all_vertices(count), PenaltyParams{});
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::VectorXd q = near_surface_points(rng, count);
    const ContactSet set = model.evaluate(model.all_pairs(), q, rng.uniform(0, 2));
    for (int i = 0; i < set.size(); ++i) {
      Eigen::Matrix3d frame;
      frame << set.normal[i], set.tangents[i];
      CHECK((frame.transpose() * frame - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= 1e-12);
      CHECK(set.magnitude[i] >= 0.0);
      if (set.gap[i] >= model.delta()) CHECK(set.magnitude[i] == 0.0);
    }
  }
}

TEST_CASE("contact force is minus the gradient of the penalty energy and its Jacobian matches") {
  Rng rng(43);
  for (int trial = 0; trial < 20; ++trial) {
    const auto obstacles = mixed_obstacles(rng);
    const int count = 30;
    PenaltyParams penalty;
    penalty.kappa = rng.uniform(1e3, 1e5);
    const ContactModel model(obstacles, all_vertices(count), penalty);
    const auto pairs = model.all_pairs();
    const double t = rng.uniform(0.0, 1.5);
    const Eigen::VectorXd q = near_surface_points(rng, count);
    auto force = [&](const Eigen::VectorXd& x) {
      Eigen::VectorXd f = Eigen::VectorXd::Zero(x.size());
      model.add_force<double>(pairs, x, t, f);
      return f;
    };
    const Eigen::VectorXd f = force(q);
    const Eigen::VectorXd fd = -test::fd_gradient([&](const Eigen::VectorXd& x) { return model.energy(pairs, x, t); }, q, 1e-9);
    CHECK(test::relative_error(f, fd) <= 1e-5);

    std::vector<Eigen::Triplet<double>> triplets;
    model.add_force_jacobian(pairs, q, t, 1.0, triplets);
    const Eigen::VectorXd dir = rng.vector(q.size());
    CHECK(test::relative_error(test::from_triplets(q.size(), triplets) * dir, test::fd_directional(force, q, dir, 1e-9)) <= 1e-4);
  }
}

TEST_CASE("penalty force is conservative around closed loops") {
  Rng rng(44);
  const auto obstacles = mixed_obstacles(rng);
  const ContactModel model(obstacles, {0}, PenaltyParams{1e-3, 1e4, 1e12});
  const auto pairs = model.all_pairs();
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Vector3d center(rng.uniform(-0.05, 0.05), rng.uniform(-5e-4, 5e-4), rng.uniform(-0.05, 0.05));
    const Eigen::Vector3d a = rng.unit3() * 1e-3, b = rng.unit3() * 1e-3;
    const int segments = 4000;
    double work = 0.0, scale = 0.0;
    for (int k = 0; k < segments; ++k) {
      // Midpoint rule on the closed loop x(s) = center + a cos s + b sin s.
      const double s = 2.0 * M_PI * (k + 0.5) / segments;
      const Eigen::VectorXd x = center + a * std::cos(s) + b * std::sin(s);
      const Eigen::Vector3d dx = (-a * std::sin(s) + b * std::cos(s)) * (2.0 * M_PI / segments);
      Eigen::VectorXd f = Eigen::VectorXd::Zero(3);
      model.add_force<double>(pairs, x, 0.3, f);
      work += f.dot(dx);
      scale += std::abs(f.dot(dx));
    }
    CHECK(std::abs(work) <= 1e-6 * std::max(scale, 1e-30));
  }
}

TEST_CASE("sliding basis extracts tangential velocity and is the adjoint of its transpose") {
  Rng rng(45);
  const auto obstacles = mixed_obstacles(rng);
  const int count = 25;
  const ContactModel model(obstacles, all_vertices(count), PenaltyParams{});
  const Eigen::VectorXd q = near_surface_points(rng, count);
  const ContactSet set = model.evaluate(model.all_pairs(), q, 0.0);
  const Eigen::SparseMatrix<double> T = sliding_basis(set, q.size());
  REQUIRE(T.cols() == 2 * set.size());
  CHECK(T.nonZeros() == 6 * set.size());

  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd y = rng.vector(T.cols()), v = rng.vector(T.rows());
    CHECK((T * y).dot(v) == doctest::Approx(y.dot(T.transpose() * v)).epsilon(1e-12));
  }
  for (int i = 0; i < set.size(); ++i) {
    const int vertex = set.contacts[i].vertex;
    Eigen::VectorXd v = Eigen::VectorXd::Zero(q.size());
    v.segment<3>(3 * vertex) = rng.uniform(0.1, 3.0) * set.normal[i];
    const Eigen::VectorXd normal_only = T.transpose() * v;
    CHECK(normal_only.segment<2>(2 * i).norm() <= 1e-12 * v.norm());
    const double speed = rng.uniform(0.1, 3.0);
    v.setZero();
    v.segment<3>(3 * vertex) = speed * set.tangents[i] * Eigen::Vector2d(rng.uniform(-1, 1), rng.uniform(-1, 1)).normalized();
    CHECK((T.transpose() * v).segment<2>(2 * i).norm() == doctest::Approx(speed).epsilon(1e-12));
  }
}

TEST_CASE("adaptive stiffening examples") {
  PenaltyParams penalty;
  penalty.delta = 1e-3;
  penalty.kappa = 100.0;
  penalty.kappa_max = 1e12;
  const StiffenDecision at_zero = adaptive_stiffen(0.0, penalty);
  CHECK(at_zero.retry);
  CHECK(at_zero.factor == doctest::Approx(4.0));
  CHECK(at_zero.new_kappa == doctest::Approx(400.0));
  const StiffenDecision positive = adaptive_stiffen(0.1 * penalty.delta, penalty);
  CHECK_FALSE(positive.retry);
  CHECK(positive.new_kappa == 100.0);
  CHECK(adaptive_stiffen(-penalty.delta, penalty).factor == doctest::Approx(16.0));
  penalty.kappa_max = 1000.0;
  try {
    adaptive_stiffen(-penalty.delta, penalty);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::Solver);
    CHECK(std::string(e.what()).find("time step") != std::string::npos);
  }
}

TEST_CASE("stiffening never decreases kappa") {
  Rng rng(46);
  PenaltyParams penalty;
  for (int trial = 0; trial < 200; ++trial) {
    penalty.kappa = rng.uniform(1.0, 1e6);
    const StiffenDecision d = adaptive_stiffen(rng.uniform(-3.0, 3.0) * penalty.delta, penalty);
    CHECK(d.new_kappa >= penalty.kappa);
    if (d.retry) CHECK(d.factor >= 4.0);
  }
}

TEST_CASE("initial kappa balances the vertex weight at half the thickness") {
  const double delta = 1e-3, weight = 0.37;
  CHECK(contact_magnitude(0.5 * delta, delta, initial_kappa(weight, delta)) == doctest::Approx(weight));
}

TEST_CASE("scripted motion: keyframe interpolation, velocity and surface velocity") {
  ObstacleMotion motion;
  motion.keyframes = {{0.0, Eigen::Vector3d::Zero()}, {1.0, Eigen::Vector3d(1.0, 0.0, 0.0)}, {3.0, Eigen::Vector3d(1.0, 2.0, 0.0)}};
  CHECK(motion.offset(0.5).isApprox(Eigen::Vector3d(0.5, 0.0, 0.0)));
  CHECK(motion.offset(2.0).isApprox(Eigen::Vector3d(1.0, 1.0, 0.0)));
  CHECK(motion.offset(5.0).isApprox(Eigen::Vector3d(1.0, 2.0, 0.0)));
  CHECK(motion.linear_velocity(0.5).isApprox(Eigen::Vector3d(1.0, 0.0, 0.0)));
  CHECK(motion.linear_velocity(1.0).isApprox(Eigen::Vector3d(1.0, 0.0, 0.0)));
  CHECK(motion.linear_velocity(1.5).isApprox(Eigen::Vector3d(0.0, 1.0, 0.0)));
  CHECK(motion.linear_velocity(4.0).isZero(0.0));
  CHECK_FALSE(motion.is_static());

  Rng rng(47);
  Obstacle ob = ground_plane();
  ob.point = rng.vec3();
  ob.motion = motion;
  ob.motion.angular_velocity = rng.vec3(2.0);
  for (int trial = 0; trial < 20; ++trial) {
    // A material point fixed to the obstacle: x(t) = ref(t) + R(t) X.
    const Eigen::Vector3d X = rng.vec3();
    const double t = rng.uniform(0.1, 2.9);
    if (std::abs(t - 1.0) < 1e-3) continue;
    auto material_point = [&](double s) -> Eigen::Vector3d {
      return ob.point + ob.motion.offset(s) + ob.motion.rotation(s) * X;
    };
    const double s = 1e-6;
    const Eigen::Vector3d fd = (material_point(t + s) - material_point(t - s)) / (2.0 * s);
    CHECK(test::relative_error(ob.surface_velocity<double>(material_point(t), t), fd) <= 1e-7);
  }
}

TEST_CASE("candidates and deepest gap") {
  PenaltyParams penalty;
  const ContactModel model({ground_plane()}, {0, 1, 2}, penalty);
  Eigen::VectorXd q(9), predicted(9);
  q << 0, 0.01, 0, 0, 0.0012, 0, 0, 0.0001, 0;
  predicted = q;
  predicted[1] = 0.001;
  const auto now = model.candidates({&q}, 0.0, 1.5 * penalty.delta);
  CHECK(now == std::vector<ContactPoint>{{1, 0}, {2, 0}});
  const auto both = model.candidates({&q, &predicted}, 0.0, 1.5 * penalty.delta);
  CHECK(both == std::vector<ContactPoint>{{0, 0}, {1, 0}, {2, 0}});
  CHECK(model.deepest_gap(q, 0.0) == doctest::Approx(0.0001));
  const ContactModel empty;
  CHECK(empty.deepest_gap(q, 0.0) == std::numeric_limits<double>::infinity());
}

TEST_CASE("obstacle validation names the field") {
  Obstacle ob = ground_plane();
  ob.normal = Eigen::Vector3d(0.0, 2.0, 0.0);
  try {
    ob.validate();
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("normal") != std::string::npos);
  }
  Obstacle ball = sphere({0, 0, 0}, -1.0, false);
  CHECK_THROWS_AS(ball.validate(), Error);
}
