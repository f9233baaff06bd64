#include "toolforge/robot.hpp"

#include <functional>
#include <map>
#include <set>

#include "toolforge/errors.hpp"
#include "toolforge/io.hpp"

namespace toolforge {

std::filesystem::path RobotModel::data_path(const std::string& file) {
  return std::filesystem::path(TOOLFORGE_DATA_DIR) / "robots" / file;
}

RobotModel RobotModel::default_model() {
  static const RobotModel model = load(data_path("default_29dof.json"));
  return model;
}

RobotModel RobotModel::load(const std::filesystem::path& path) {
  return from_json(parse_json_file(path));
}

RobotModel RobotModel::from_json(const json& j) {
  const std::string ctx = "robot";
  RobotModel m;
  m.source_ = j;
  m.name_ = j.value("name", std::string("robot"));
  const json& links = require_field(j, "links", ctx);
  if (!links.is_array() || links.empty()) throw ValidationError("robot.links: expected a non-empty array");

  std::vector<Link> raw;
  std::map<std::string, int> by_name;
  for (std::size_t i = 0; i < links.size(); ++i) {
    const std::string lctx = "robot.links[" + std::to_string(i) + "]";
    const json& l = links[i];
    Link link;
    const json& name = require_field(l, "name", lctx);
    if (!name.is_string() || name.get<std::string>().empty() || name == "world") {
      throw ValidationError(lctx + ".name: expected a non-empty string other than 'world'");
    }
    link.name = name.get<std::string>();
    link.parent = l.value("parent", std::string("world"));
    if (l.contains("fixed_transform")) {
      link.fixed_transform = pose_from_json(l["fixed_transform"], lctx + ".fixed_transform");
    }
    const std::string type = l.value("type", std::string("fixed"));
    if (type == "revolute") {
      link.type = JointType::Revolute;
      const Vec3 axis = vec3_from_json(require_field(l, "axis", lctx), lctx + ".axis");
      if (axis.norm() < 1e-9) throw ValidationError(lctx + ".axis: zero axis");
      link.axis = axis.normalized();
      const json& lim = require_field(l, "limits", lctx);
      if (!lim.is_array() || lim.size() != 2 || !lim[0].is_number() || !lim[1].is_number()) {
        throw ValidationError(lctx + ".limits: expected [lower, upper]");
      }
      link.lower = lim[0].get<double>();
      link.upper = lim[1].get<double>();
      if (!(link.lower < link.upper)) {
        throw ValidationError(lctx + ".limits: lower must be < upper for joint '" + link.name + "'");
      }
    } else if (type != "fixed") {
      throw ValidationError(lctx + ".type: expected 'revolute' or 'fixed'");
    }
    if (!by_name.emplace(link.name, static_cast<int>(raw.size())).second) {
      throw ValidationError("robot.links: duplicate frame name '" + link.name + "'");
    }
    raw.push_back(link);
  }

  // Topological order; reject unknown parents and cycles.
  std::vector<int> state(raw.size(), 0);  // 0 new, 1 visiting, 2 done
  std::vector<int> order;
  std::function<void(int)> visit = [&](int i) {
    if (state[i] == 2) return;
    if (state[i] == 1) throw ValidationError("robot.links: cycle through '" + raw[i].name + "'");
    state[i] = 1;
    if (raw[i].parent != "world") {
      auto it = by_name.find(raw[i].parent);
      if (it == by_name.end()) {
        throw ValidationError("robot.links: unknown parent '" + raw[i].parent + "' of '" +
                              raw[i].name + "'");
      }
      visit(it->second);
    }
    state[i] = 2;
    order.push_back(i);
  };
  for (std::size_t i = 0; i < raw.size(); ++i) visit(static_cast<int>(i));

  std::map<std::string, int> topo_index;
  for (int i : order) {
    Link link = raw[i];
    link.parent_index = link.parent == "world" ? -1 : topo_index.at(link.parent);
    topo_index[link.name] = static_cast<int>(m.links_.size());
    m.links_.push_back(link);
  }
  // q indices follow file order
  for (const Link& l : raw) {
    if (l.type != JointType::Revolute) continue;
    const int idx = topo_index.at(l.name);
    m.links_[idx].q_index = static_cast<int>(m.joint_links_.size());
    m.joint_links_.push_back(idx);
    m.joint_names_.push_back(l.name);
  }

  if (j.contains("limit_shrink")) {
    const json& s = j["limit_shrink"];
    m.shrink_factor_ = require_number(s, "factor", "robot.limit_shrink");
    if (!(m.shrink_factor_ > 0.0 && m.shrink_factor_ <= 1.0)) {
      throw ValidationError("robot.limit_shrink.factor: must be in (0, 1]");
    }
    for (const auto& name : require_field(s, "joints", "robot.limit_shrink")) {
      const std::string jn = name.get<std::string>();
      auto it = topo_index.find(jn);
      if (it == topo_index.end() || m.links_[it->second].type != JointType::Revolute) {
        throw ValidationError("robot.limit_shrink.joints: '" + jn + "' is not a revolute joint");
      }
      Link& l = m.links_[it->second];
      const double mid = 0.5 * (l.lower + l.upper);
      const double half = 0.5 * (l.upper - l.lower) * m.shrink_factor_;
      l.lower = mid - half;
      l.upper = mid + half;
      m.shrink_joints_.push_back(jn);
    }
  }

  const int n = m.dof();
  m.lower_.resize(n);
  m.upper_.resize(n);
  for (int k = 0; k < n; ++k) {
    m.lower_[k] = m.links_[m.joint_links_[k]].lower;
    m.upper_[k] = m.links_[m.joint_links_[k]].upper;
  }
  m.n_arm_ = j.value("n_arm", n);
  if (m.n_arm_ < 0 || m.n_arm_ > n) throw ValidationError("robot.n_arm: out of range");

  if (j.contains("home")) {
    const json& h = j["home"];
    if (!h.is_array() || static_cast<int>(h.size()) != n) {
      throw ValidationError("robot.home: expected " + std::to_string(n) + " values");
    }
    m.home_.resize(n);
    for (int k = 0; k < n; ++k) m.home_[k] = h[k].get<double>();
    m.home_ = m.clamp(m.home_);
  } else {
    m.home_ = m.clamp(VecX::Zero(n));
  }

  auto frame_ref = [&](const json& v, const std::string& fctx) {
    if (!v.is_string()) throw ValidationError(fctx + ": expected a frame name");
    auto it = topo_index.find(v.get<std::string>());
    if (it == topo_index.end()) throw ValidationError(fctx + ": unknown frame '" + v.get<std::string>() + "'");
    return it->second;
  };
  if (j.contains("frames")) {
    const json& f = j["frames"];
    if (f.contains("palm")) m.palm_ = frame_ref(f["palm"], "robot.frames.palm");
    if (f.contains("end_effector")) m.end_effector_ = frame_ref(f["end_effector"], "robot.frames.end_effector");
    if (f.contains("fingertips")) {
      for (const auto& t : f["fingertips"]) m.fingertips_.push_back(frame_ref(t, "robot.frames.fingertips"));
    }
  }
  if (m.end_effector_ < 0) m.end_effector_ = static_cast<int>(m.links_.size()) - 1;

  if (j.contains("collision_spheres")) {
    for (std::size_t i = 0; i < j["collision_spheres"].size(); ++i) {
      const json& s = j["collision_spheres"][i];
      const std::string sctx = "robot.collision_spheres[" + std::to_string(i) + "]";
      CollisionSphere cs;
      cs.link = frame_ref(require_field(s, "link", sctx), sctx + ".link");
      cs.center = vec3_from_json(require_field(s, "center", sctx), sctx + ".center");
      cs.radius = require_number(s, "radius", sctx);
      if (!(cs.radius > 0.0)) throw ValidationError(sctx + ".radius: must be > 0");
      m.spheres_.push_back(cs);
    }
  }
  return m;
}

int RobotModel::link_index(const std::string& name) const {
  if (auto i = find_link(name)) return *i;
  throw ValidationError("unknown frame '" + name + "'");
}

std::optional<int> RobotModel::find_link(const std::string& name) const {
  for (std::size_t i = 0; i < links_.size(); ++i) {
    if (links_[i].name == name) return static_cast<int>(i);
  }
  return std::nullopt;
}

VecX RobotModel::clamp(const VecX& q) const {
  check_q(q);
  return q.cwiseMax(lower_).cwiseMin(upper_);
}

bool RobotModel::within_limits(const VecX& q, double tol) const {
  check_q(q);
  return ((q.array() >= lower_.array() - tol) && (q.array() <= upper_.array() + tol)).all();
}

void RobotModel::check_q(const VecX& q) const {
  if (q.size() != dof()) {
    throw ValidationError("joint vector has length " + std::to_string(q.size()) + ", model expects " +
                          std::to_string(dof()));
  }
  if (!q.allFinite()) throw ValidationError("joint vector is not finite");
}

std::vector<Pose> RobotModel::forward_kinematics(const VecX& q) const {
  check_q(q);
  std::vector<Pose> poses(links_.size());
  for (std::size_t i = 0; i < links_.size(); ++i) {
    const Link& l = links_[i];
    Pose p = l.parent_index < 0 ? l.fixed_transform : compose(poses[l.parent_index], l.fixed_transform);
    if (l.type == JointType::Revolute) {
      p.rotation = (p.rotation * Quat(Eigen::AngleAxisd(q[l.q_index], l.axis))).normalized();
    }
    poses[i] = p;
  }
  return poses;
}

Pose RobotModel::frame_pose(const VecX& q, int link) const {
  return forward_kinematics(q).at(static_cast<std::size_t>(link));
}

bool RobotModel::joint_affects(int joint, int link) const {
  const int target = joint_links_.at(static_cast<std::size_t>(joint));
  for (int i = link; i >= 0; i = links_[i].parent_index) {
    if (i == target) return true;
  }
  return false;
}

Jacobian RobotModel::jacobian_from_poses(const std::vector<Pose>& poses, int link,
                                         const Vec3& point) const {
  Jacobian J = Jacobian::Zero(6, dof());
  const Vec3 p = poses.at(static_cast<std::size_t>(link)).apply(point);
  for (int i = link; i >= 0; i = links_[i].parent_index) {
    const Link& l = links_[i];
    if (l.type != JointType::Revolute) continue;
    // joint rotation does not move its own origin, so the link pose gives
    // both the axis and the pivot
    const Vec3 axis = poses[i].rotation * l.axis;
    const Vec3 pivot = poses[i].translation;
    J.block<3, 1>(0, l.q_index) = axis.cross(p - pivot);
    J.block<3, 1>(3, l.q_index) = axis;
  }
  return J;
}

Jacobian RobotModel::jacobian(const VecX& q, int link, const Vec3& point) const {
  return jacobian_from_poses(forward_kinematics(q), link, point);
}

json RobotModel::to_json() const { return source_; }

}  // namespace toolforge
