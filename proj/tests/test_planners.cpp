#include <numbers>

#include <Eigen/SVD>

#include "support.hpp"
#include "toolforge/errors.hpp"
#include "toolforge/planners.hpp"
#include "toolforge/traj_eval.hpp"

using namespace toolforge;

namespace {

RobotModel planar() { return RobotModel::load(RobotModel::data_path("planar2.json")); }

VecX random_config(const RobotModel& m, Rng& rng, double shrink = 1.0) {
  VecX q(m.dof());
  for (int i = 0; i < m.dof(); ++i) {
    const double mid = 0.5 * (m.lower()[i] + m.upper()[i]);
    const double half = 0.5 * (m.upper()[i] - m.lower()[i]) * shrink;
    q[i] = rng.uniform(mid - half, mid + half);
  }
  return q;
}

Eigen::Matrix4d homogeneous(const Pose& p) {
  Eigen::Matrix4d T = Eigen::Matrix4d::Identity();
  T.topLeftCorner<3, 3>() = p.rotation.toRotationMatrix();
  T.topRightCorner<3, 1>() = p.translation;
  return T;
}

}  // namespace

TEST_SUITE("planners") {
  TEST_CASE("dls step basics") {
    const MatX J = MatX::Identity(6, 6);
    CHECK(dls_step(J, VecX::Zero(6), 0.05).isZero());
    VecX e(6);
    e << 0.1, -0.2, 0.3, 0.01, 0.0, -0.05;
    CHECK((dls_step(J, e, 1e-6) - e).norm() < 1e-9);
    CHECK_THROWS_AS(dls_step(J, e, 0.0), ValidationError);
    VecX bad = e;
    bad[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(dls_step(J, bad, 0.05), ValidationError);
  }

  TEST_CASE("property: dls update norm bound matches the SVD oracle") {
    Rng rng(51);
    for (int trial = 0; trial < 1000; ++trial) {
      const int n = static_cast<int>(rng.uniform_int(1, 12));
      MatX J(6, n);
      for (int i = 0; i < J.size(); ++i) J.data()[i] = rng.normal(0.0, std::pow(10.0, rng.uniform(-3, 1)));
      VecX e(6);
      for (int i = 0; i < 6; ++i) e[i] = rng.normal();
      const double mu = std::pow(10.0, rng.uniform(-3, 0));
      const VecX dq = dls_step(J, e, mu);
      // oracle: dq = V diag(s / (s^2 + mu^2)) U^T e
      Eigen::JacobiSVD<MatX> svd(J, Eigen::ComputeThinU | Eigen::ComputeThinV);
      const VecX s = svd.singularValues();
      const VecX gain = s.array() / (s.array().square() + mu * mu);
      const VecX oracle = svd.matrixV() * gain.asDiagonal() * svd.matrixU().transpose() * e;
      REQUIRE((dq - oracle).norm() <= 1e-8 * std::max(1.0, oracle.norm()));
      REQUIRE(dq.norm() <= e.norm() / (2.0 * mu) * (1.0 + 1e-12));
    }
  }

  TEST_CASE("pose error is zero only for equal poses") {
    Rng rng(1);
    const Pose a = test::random_pose(rng);
    CHECK(pose_error(a, a).norm() < 1e-15);
    Pose b = a;
    b.translation.x() += 0.01;
    CHECK(pose_error(a, b).head<3>().norm() == doctest::Approx(0.01));
    b = a;
    b.rotation = quat_from_axis_angle(Vec3::UnitZ(), 0.2) * a.rotation;
    CHECK(pose_error(a, b).tail<3>().norm() == doctest::Approx(0.2));
    CHECK(pose_error(a, b).tail<3>().normalized().isApprox(Vec3::UnitZ()));
  }

  TEST_CASE("ik at the current pose needs no iterations") {
    const RobotModel& m = RobotModel::default_model();
    const Pose target = m.frame_pose(m.home(), m.palm_link());
    const IkResult r = solve_ik(m, m.palm_link(), target, m.home());
    CHECK(r.converged);
    CHECK(r.iterations == 0);
    CHECK(r.q == m.home());
  }

  TEST_CASE("planar ik matches the closed-form two-link solution") {
    const RobotModel m = planar();
    const int tip = m.link_index("tip");
    IkOptions opts;
    opts.position_only = true;
    opts.tol = 1e-9;
    opts.max_iters = 500;
    opts.restarts = 4;  // a folded elbow can pin q2 at its limit from a fixed start
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
      const double r = rng.uniform(0.3, 1.9), phi = rng.uniform(-std::numbers::pi, std::numbers::pi);
      Pose target;
      target.translation = Vec3(r * std::cos(phi), r * std::sin(phi), 0.0);
      const IkResult res = solve_ik(m, tip, target, Eigen::Vector2d(0.3, 0.5), opts);
      CHECK(res.position_error < 1e-6);
      // closed form: cos(q2) = (r^2 - 2) / 2
      const double c2 = (r * r - 2.0) / 2.0;
      CHECK(std::cos(res.q[1]) == doctest::Approx(c2).epsilon(1e-5));
      const double q2 = res.q[1];
      const double q1 = phi - std::atan2(std::sin(q2), 1.0 + std::cos(q2));
      CHECK(std::remainder(res.q[0] - q1, 2 * std::numbers::pi) == doctest::Approx(0.0).epsilon(1e-5));
    }
  }

  TEST_CASE("unreachable planar target reports the distance to the boundary") {
    const RobotModel m = planar();
    IkOptions opts;
    opts.position_only = true;
    Pose target;
    target.translation = Vec3(2.4, 1.8, 0.0);  // |p| = 3, reach 2
    const IkResult res = solve_ik(m, m.link_index("tip"), target, Eigen::Vector2d(0.1, 0.2), opts);
    CHECK(!res.converged);
    CHECK(res.position_error == doctest::Approx(1.0).epsilon(1e-3));
  }

  TEST_CASE("property: ik on the default arm converges to random reachable poses") {
    const RobotModel& m = RobotModel::default_model();
    Rng rng(52);
    IkOptions opts;
    opts.active_joints.resize(m.n_arm());
    for (int i = 0; i < m.n_arm(); ++i) opts.active_joints[i] = i;
    int ok = 0;
    for (int trial = 0; trial < 30; ++trial) {
      VecX q = m.home();
      q.head(m.n_arm()) = random_config(m, rng, 0.8).head(m.n_arm());
      const Pose target = m.frame_pose(q, m.palm_link());
      VecX q0 = q;
      for (int i = 0; i < m.n_arm(); ++i) q0[i] += rng.uniform(-0.3, 0.3);
      const IkResult r = solve_ik(m, m.palm_link(), target, m.clamp(q0), opts);
      CHECK(m.within_limits(r.q));
      if (r.position_error < 1e-3 && r.rotation_error < std::numbers::pi / 180) ++ok;
    }
    CHECK(ok == 30);
  }

  TEST_CASE("seeded restarts recover from limit-bound local minima deterministically") {
    const RobotModel& m = RobotModel::default_model();
    IkOptions opts;
    for (int i = 0; i < m.n_arm(); ++i) opts.active_joints.push_back(i);
    opts.restarts = 8;
    opts.restart_seed = 11;
    Rng rng(56);
    for (int trial = 0; trial < 20; ++trial) {
      VecX q = m.home();
      q.head(m.n_arm()) = random_config(m, rng, 0.8).head(m.n_arm());
      const Pose target = m.frame_pose(q, m.palm_link());
      IkOptions single = opts;
      single.restarts = 0;
      const IkResult a = solve_ik(m, m.palm_link(), target, m.home(), opts);
      const IkResult b = solve_ik(m, m.palm_link(), target, m.home(), opts);
      CHECK(a.q == b.q);
      CHECK(a.error_norm <= solve_ik(m, m.palm_link(), target, m.home(), single).error_norm);
    }
    opts.restarts = -1;
    CHECK_THROWS_AS(solve_ik(m, m.palm_link(), Pose{}, m.home(), opts), ValidationError);
  }

  TEST_CASE("ik error never increases along the iterations") {
    const RobotModel& m = RobotModel::default_model();
    Rng rng(57);
    VecX q = m.home();
    q.head(m.n_arm()) = random_config(m, rng, 0.8).head(m.n_arm());
    const Pose target = m.frame_pose(q, m.palm_link());
    double prev = std::numeric_limits<double>::infinity();
    for (int iters = 1; iters <= 40; ++iters) {
      IkOptions opts;
      opts.max_iters = iters;
      const double err = solve_ik(m, m.palm_link(), target, m.home(), opts).error_norm;
      CHECK(err <= prev);
      prev = err;
    }
  }

  TEST_CASE("fixed-grasp targets") {
    Rng rng(4);
    std::vector<Pose> goals;
    for (int i = 0; i < 10; ++i) goals.push_back(test::random_pose(rng));
    const auto same = fixed_grasp_targets(Pose{}, goals);
    for (int i = 0; i < 10; ++i) CHECK(test::near_pose(same[i], goals[i], 1e-15));

    const Pose T_EO = test::random_pose(rng, 0.2);
    const auto targets = fixed_grasp_targets(T_EO, goals);
    for (int i = 0; i < 10; ++i) {
      CHECK(test::near_pose(compose(targets[i], T_EO), goals[i], 1e-12));
      const Eigen::Matrix4d oracle = homogeneous(goals[i]) * homogeneous(T_EO).inverse();
      CHECK((homogeneous(targets[i]) - oracle).cwiseAbs().maxCoeff() < 1e-12);
    }
  }

  TEST_CASE("yawing the object sweeps the end effector along an arc") {
    Pose T_EO;
    T_EO.translation = Vec3(0.1, 0.0, 0.0);
    std::vector<Pose> goals;
    for (int k = 0; k < 8; ++k) {
      Pose g;
      g.rotation = quat_from_axis_angle(Vec3::UnitZ(), k * std::numbers::pi / 8);
      goals.push_back(g);
    }
    for (const Pose& t : fixed_grasp_targets(T_EO, goals)) {
      CHECK(t.translation.norm() == doctest::Approx(0.1).epsilon(1e-12));
      CHECK(std::abs(t.translation.z()) < 1e-15);
    }
  }

  TEST_CASE("single-waypoint trajopt agrees with ik") {
    const RobotModel& m = RobotModel::default_model();
    VecX q = m.home();
    q[1] += 0.2;
    q[3] -= 0.1;
    TrajOptProblem p;
    p.frame = m.palm_link();
    p.targets = {m.frame_pose(q, m.palm_link())};
    const TrajReport dls = plan_dls(p, m, m.home());
    const TrajReport opt = optimize_trajectory(p, m, dls.q);
    CHECK((opt.q[0] - dls.q[0]).cwiseAbs().maxCoeff() < 1e-4);
    CHECK(opt.max_position_error < 1e-4);
  }

  TEST_CASE("rotation near the table: dls penetrates and trajopt stays clear") {
    const RobotModel& m = RobotModel::default_model();
    const GoalTrajectory goals = load_trajectory(test::fixture("plan/goals.jsonl"));
    const Pose T_EO = pose_from_json(parse_json_file(test::fixture("plan/grab.json"))["T_EO"], "grab.T_EO");
    TrajOptProblem p;
    p.targets = fixed_grasp_targets(T_EO, goals.poses());
    p.obstacles = {HalfSpace{Vec3::UnitZ(), goals.table_z}};
    const TrajReport dls = plan_dls(p, m, m.home());
    CHECK(dls.min_collision_margin < 0.0);
    CHECK(dls.max_position_error < 1e-3);
    const TrajReport opt = optimize_trajectory(p, m, dls.q);
    CHECK(opt.min_collision_margin >= 0.0);
    CHECK(opt.max_position_error > dls.max_position_error);
    for (const VecX& q : opt.q) CHECK(m.within_limits(q));
    for (std::size_t i = 1; i < opt.cost_history.size(); ++i) CHECK(opt.cost_history[i] <= opt.cost_history[i - 1]);
    const TrajReport again = optimize_trajectory(p, m, dls.q);
    CHECK(again.to_json().dump() == opt.to_json().dump());
    const TrajReport eval = evaluate_trajectory(p, m, opt.q);
    CHECK(eval.min_collision_margin == doctest::Approx(opt.min_collision_margin));
  }

  TEST_CASE("property: trajopt output respects joint limits from any warm start") {
    const RobotModel& m = RobotModel::default_model();
    Rng rng(53);
    TrajOptProblem p;
    p.frame = m.palm_link();
    for (int k = 0; k < 3; ++k) {
      Pose t = m.frame_pose(m.home(), m.palm_link());
      t.translation += Vec3(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5));
      p.targets.push_back(t);
    }
    p.max_iters = 20;
    std::vector<VecX> warm;
    for (int k = 0; k < 3; ++k) {
      VecX q = m.home();
      for (int i = 0; i < m.n_arm(); ++i) q[i] = rng.uniform(-4, 4);  // deliberately outside limits
      warm.push_back(q);
    }
    const TrajReport r = optimize_trajectory(p, m, warm);
    for (const VecX& q : r.q) CHECK(m.within_limits(q));
  }

  TEST_CASE("trajopt problem validation") {
    TrajOptProblem p;
    CHECK_THROWS_AS(p.validate(), ValidationError);
    p.targets = {Pose{}};
    CHECK_NOTHROW(p.validate());
    p.w_smooth = -1.0;
    CHECK_THROWS_AS(p.validate(), ValidationError);
  }

  TEST_CASE("fingertip retargeting") {
    const RobotModel& m = RobotModel::default_model();
    const Pose palm = m.frame_pose(m.home(), m.palm_link());
    const VecX q_hand0 = m.home().tail(m.n_hand());
    const FingertipResult still = fingertip_retarget(m, palm, fingertip_positions(m, palm, q_hand0), q_hand0);
    CHECK(still.q_hand == q_hand0);
    CHECK(still.converged);

    Rng rng(54);
    for (int trial = 0; trial < 10; ++trial) {
      const VecX q_true = random_config(m, rng, 0.7).tail(m.n_hand());
      const auto targets = fingertip_positions(m, palm, q_true);
      const FingertipResult r = fingertip_retarget(m, palm, targets, q_hand0);
      for (double res : r.residuals) CHECK(res < 2e-3);
    }
  }

  TEST_CASE("fingertip targets outside the limits give a locally minimal clipped solution") {
    const RobotModel& m = RobotModel::default_model();
    const Pose palm = m.frame_pose(m.home(), m.palm_link());
    const VecX q_hand0 = m.home().tail(m.n_hand());
    auto targets = fingertip_positions(m, palm, q_hand0);
    for (auto& t : targets) t += palm.rotation * Vec3(0.0, 0.0, 0.3);  // far beyond the fingers
    const FingertipResult r = fingertip_retarget(m, palm, targets, q_hand0);
    CHECK(!r.converged);
    auto cost = [&](const VecX& qh) {
      const auto tips = fingertip_positions(m, palm, qh);
      double c = 0.0;
      for (int k = 0; k < 5; ++k) c += (tips[k] - targets[k]).squaredNorm();
      return c;
    };
    const VecX lo = m.lower().tail(m.n_hand()), hi = m.upper().tail(m.n_hand());
    CHECK(((r.q_hand.array() >= lo.array()) && (r.q_hand.array() <= hi.array())).all());
    const double best = cost(r.q_hand);
    Rng rng(55);
    for (int trial = 0; trial < 200; ++trial) {
      VecX q = r.q_hand;
      for (int i = 0; i < q.size(); ++i) q[i] += rng.uniform(-0.01, 0.01);
      q = q.cwiseMax(lo).cwiseMin(hi);
      CHECK(cost(q) >= best - 1e-6);
    }
  }

  TEST_CASE("two-stage retargeting places palm and fingertips") {
    const RobotModel& m = RobotModel::default_model();
    VecX q = m.home();
    q[0] += 0.1;
    q[2] -= 0.1;
    q.tail(m.n_hand()).setConstant(0.2);
    q = m.clamp(q);
    const Pose palm = m.frame_pose(q, m.palm_link());
    const auto tips = fingertip_positions(m, palm, q.tail(m.n_hand()));
    const RetargetResult r = retarget(m, palm, tips, m.home());
    CHECK(r.arm.position_error < 1e-3);
    for (double res : r.hand.residuals) CHECK(res < 2e-3);
  }
}
