#include <numbers>

#include "support.hpp"
#include "toolforge/errors.hpp"
#include "toolforge/io.hpp"
#include "toolforge/robot.hpp"

using namespace toolforge;

namespace {

RobotModel planar() { return RobotModel::load(RobotModel::data_path("planar2.json")); }

json two_link(double lower, double upper) {
  return json::parse(R"({
    "name": "t", "n_arm": 1,
    "links": [
      {"name": "a", "parent": "world", "type": "revolute", "axis": [0, 0, 1], "limits": [)" +
                     std::to_string(lower) + ", " + std::to_string(upper) + R"(]},
      {"name": "b", "parent": "a", "fixed_transform": [1, 0, 0, 1, 0, 0, 0], "type": "fixed"}
    ]})");
}

Jacobian finite_difference_jacobian(const RobotModel& m, const VecX& q, int link, double h = 1e-6) {
  Jacobian J = Jacobian::Zero(6, m.dof());
  for (int i = 0; i < m.dof(); ++i) {
    VecX qp = q, qm = q;
    qp[i] += h;
    qm[i] -= h;
    const Pose a = m.frame_pose(qp, link), b = m.frame_pose(qm, link);
    J.block<3, 1>(0, i) = (a.translation - b.translation) / (2 * h);
    J.block<3, 1>(3, i) = rotation_vector(a.rotation * b.rotation.conjugate()) / (2 * h);
  }
  return J;
}

}  // namespace

TEST_SUITE("robot") {
  TEST_CASE("default model has an arm, a hand and the named frames") {
    const RobotModel& m = RobotModel::default_model();
    CHECK(m.dof() == 29);
    CHECK(m.n_arm() == 7);
    CHECK(m.n_hand() == 22);
    CHECK(m.has_hand_frames());
    CHECK(m.within_limits(m.home()));
    CHECK(!m.collision_spheres().empty());
  }

  TEST_CASE("planar chain forward kinematics") {
    const RobotModel m = planar();
    const int tip = m.link_index("tip");
    CHECK((m.frame_pose(Eigen::Vector2d(0, 0), tip).translation - Vec3(2, 0, 0)).norm() < 1e-12);
    CHECK((m.frame_pose(Eigen::Vector2d(std::numbers::pi / 2, 0), tip).translation - Vec3(0, 2, 0)).norm() < 1e-12);
    CHECK((m.frame_pose(Eigen::Vector2d(0, std::numbers::pi / 2), tip).translation - Vec3(1, 1, 0)).norm() < 1e-12);
  }

  TEST_CASE("planar chain analytic Jacobian") {
    const RobotModel m = planar();
    const int tip = m.link_index("tip");
    const double q1 = 0.3, q2 = -0.7;
    const Jacobian J = m.jacobian(Eigen::Vector2d(q1, q2), tip);
    const double s1 = std::sin(q1), c1 = std::cos(q1), s12 = std::sin(q1 + q2), c12 = std::cos(q1 + q2);
    CHECK(J(0, 0) == doctest::Approx(-s1 - s12).epsilon(1e-12));
    CHECK(J(0, 1) == doctest::Approx(-s12).epsilon(1e-12));
    CHECK(J(1, 0) == doctest::Approx(c1 + c12).epsilon(1e-12));
    CHECK(J(1, 1) == doctest::Approx(c12).epsilon(1e-12));
    CHECK(J(5, 0) == doctest::Approx(1.0));
    CHECK(J(5, 1) == doctest::Approx(1.0));
    const Jacobian J0 = m.jacobian(Eigen::Vector2d(0, 0), tip);
    CHECK(std::abs(J0(0, 0)) < 1e-9);
    CHECK(J0(1, 0) == doctest::Approx(2.0));
    CHECK(J0(1, 1) == doctest::Approx(1.0));
  }

  TEST_CASE("property: default model Jacobians match finite differences") {
    const RobotModel& m = RobotModel::default_model();
    Rng rng(21);
    std::vector<int> frames = m.fingertip_links();
    frames.push_back(m.palm_link());
    for (int trial = 0; trial < 100; ++trial) {
      VecX q(m.dof());
      for (int i = 0; i < m.dof(); ++i) q[i] = rng.uniform(m.lower()[i], m.upper()[i]);
      const int link = frames[trial % frames.size()];
      const Jacobian J = m.jacobian(q, link);
      const Jacobian Jfd = finite_difference_jacobian(m, q, link);
      CHECK((J - Jfd).cwiseAbs().maxCoeff() < 1e-5);
    }
  }

  TEST_CASE("joints off the path to a frame contribute zero columns") {
    const RobotModel& m = RobotModel::default_model();
    const Jacobian J = m.jacobian(m.home(), m.palm_link());
    CHECK(J.rightCols(m.n_hand()).isZero());
    const Jacobian Jt = m.jacobian(m.home(), "index_tip");
    CHECK(!Jt.col(m.links()[m.link_index("index_abd")].q_index).isZero());
    CHECK(Jt.col(m.links()[m.link_index("thumb_cmc_abd")].q_index).isZero());
  }

  TEST_CASE("FK rejects wrong-length configurations") {
    const RobotModel m = planar();
    CHECK_THROWS_AS(m.forward_kinematics(VecX::Zero(3)), ValidationError);
  }

  TEST_CASE("model validation") {
    CHECK_NOTHROW(RobotModel::from_json(two_link(-1, 1)));
    CHECK_THROWS_WITH_AS(RobotModel::from_json(two_link(1, 1)), doctest::Contains("limits"), ValidationError);
    CHECK_THROWS_WITH_AS(RobotModel::from_json(two_link(2, 1)), doctest::Contains("limits"), ValidationError);

    json dup = two_link(-1, 1);
    dup["links"][1]["name"] = "a";
    CHECK_THROWS_WITH_AS(RobotModel::from_json(dup), doctest::Contains("duplicate"), ValidationError);

    json orphan = two_link(-1, 1);
    orphan["links"][1]["parent"] = "nowhere";
    CHECK_THROWS_AS(RobotModel::from_json(orphan), ValidationError);

    json cycle = two_link(-1, 1);
    cycle["links"][0]["parent"] = "b";
    CHECK_THROWS_WITH_AS(RobotModel::from_json(cycle), doctest::Contains("cycle"), ValidationError);
  }

  TEST_CASE("abduction limits are shrunk about their midpoint") {
    json j = parse_json_file(RobotModel::data_path("default_29dof.json"));
    const RobotModel shrunk = RobotModel::from_json(j);
    j.erase("limit_shrink");
    const RobotModel full = RobotModel::from_json(j);
    const int idx = shrunk.links()[shrunk.link_index("index_abd")].q_index;
    const double w_full = full.upper()[idx] - full.lower()[idx];
    const double w_shrunk = shrunk.upper()[idx] - shrunk.lower()[idx];
    CHECK(w_shrunk == doctest::Approx(0.8 * w_full));
    CHECK(shrunk.upper()[idx] + shrunk.lower()[idx] == doctest::Approx(full.upper()[idx] + full.lower()[idx]));
  }

  TEST_CASE("property: clamp is idempotent and order preserving") {
    const RobotModel& m = RobotModel::default_model();
    Rng rng(22);
    for (int trial = 0; trial < 200; ++trial) {
      VecX a(m.dof()), b(m.dof());
      for (int i = 0; i < m.dof(); ++i) {
        a[i] = rng.uniform(-6, 6);
        b[i] = a[i] + rng.uniform(0, 2);
      }
      const VecX ca = m.clamp(a), cb = m.clamp(b);
      CHECK(m.clamp(ca) == ca);
      CHECK(m.within_limits(ca));
      CHECK((cb.array() >= ca.array()).all());
    }
  }

  TEST_CASE("model JSON round trip") {
    const RobotModel& m = RobotModel::default_model();
    const RobotModel n = RobotModel::from_json(m.to_json());
    CHECK(n.dof() == m.dof());
    CHECK(n.lower() == m.lower());
    CHECK(n.upper() == m.upper());
    CHECK(n.home() == m.home());
    const Pose a = m.frame_pose(m.home(), m.palm_link()), b = n.frame_pose(n.home(), n.palm_link());
    CHECK(a.to_array() == b.to_array());
  }
}
