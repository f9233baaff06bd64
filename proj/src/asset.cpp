#include "toolforge/asset.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "toolforge/errors.hpp"
#include "toolforge/io.hpp"

namespace toolforge {
namespace {

constexpr double kPi = std::numbers::pi;

// Cylinder segment length of a capsule (tip-to-tip length minus diameter).
double capsule_segment(const PartSpec& p) { return std::max(p.length - p.width, 0.0); }

void check_range(const Range& r, const char* name) {
  if (!std::isfinite(r.min) || !std::isfinite(r.max) || r.min > r.max) {
    throw ValidationError(std::string("sample range ") + name + ": min > max or not finite");
  }
}

PartSpec sample_part(Rng& rng, double capsule_p, const Range& length, const Range& width,
                     const Range& density) {
  PartSpec p;
  p.shape = rng.bernoulli(capsule_p) ? PartShape::Capsule : PartShape::Cuboid;
  p.length = rng.uniform(length.min, length.max);
  p.width = rng.uniform(width.min, width.max);
  p.height = p.shape == PartShape::Capsule ? p.width : rng.uniform(width.min, width.max);
  p.density = rng.uniform(density.min, density.max);
  return p;
}

json part_to_json(const PartSpec& p) {
  return {{"shape", to_string(p.shape)},
          {"length", p.length},
          {"width", p.width},
          {"height", p.height},
          {"density", p.density}};
}

PartSpec part_from_json(const json& j, const std::string& ctx) {
  PartSpec p;
  const json& shape = require_field(j, "shape", ctx);
  if (!shape.is_string()) throw ValidationError(ctx + ".shape: expected a string");
  try {
    p.shape = part_shape_from_string(shape.get<std::string>());
  } catch (const ValidationError& e) {
    throw ValidationError(ctx + ".shape: " + e.what());
  }
  p.length = require_number(j, "length", ctx);
  p.width = require_number(j, "width", ctx);
  p.height = require_number(j, "height", ctx);
  p.density = require_number(j, "density", ctx);
  p.validate(ctx);
  return p;
}

}  // namespace

std::string to_string(PartShape s) { return s == PartShape::Cuboid ? "cuboid" : "capsule"; }

PartShape part_shape_from_string(const std::string& s) {
  if (s == "cuboid") return PartShape::Cuboid;
  if (s == "capsule") return PartShape::Capsule;
  throw ValidationError("unknown part shape '" + s + "'");
}

void PartSpec::validate(const std::string& field) const {
  auto positive = [&](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ValidationError(field + "." + name + ": must be finite and > 0");
    }
  };
  positive(length, "length");
  positive(width, "width");
  positive(height, "height");
  if (!(density >= 0.0) || !std::isfinite(density)) {
    throw ValidationError(field + ".density: must be finite and >= 0");
  }
  if (shape == PartShape::Capsule && width != height) {
    throw ValidationError(field + ".height: capsule requires width == height");
  }
}

double PartSpec::volume() const {
  if (shape == PartShape::Cuboid) return length * width * height;
  const double r = width / 2.0;
  return kPi * r * r * capsule_segment(*this) + 4.0 / 3.0 * kPi * r * r * r;
}

Mat3 PartSpec::inertia() const {
  Mat3 I = Mat3::Zero();
  if (shape == PartShape::Cuboid) {
    const double m = mass();
    I(0, 0) = m * (width * width + height * height) / 12.0;
    I(1, 1) = m * (length * length + height * height) / 12.0;
    I(2, 2) = m * (length * length + width * width) / 12.0;
    return I;
  }
  // Cylinder of length l plus two hemispherical caps; axis along x.
  const double r = width / 2.0;
  const double l = capsule_segment(*this);
  const double m_cyl = density * kPi * r * r * l;
  const double m_caps = density * 4.0 / 3.0 * kPi * r * r * r;
  const double axial = m_cyl * r * r / 2.0 + m_caps * 2.0 * r * r / 5.0;
  const double transverse = m_cyl * (l * l / 12.0 + r * r / 4.0) +
                            m_caps * (2.0 * r * r / 5.0 + l * l / 4.0 + 3.0 * l * r / 8.0);
  I(0, 0) = axial;
  I(1, 1) = transverse;
  I(2, 2) = transverse;
  return I;
}

bool PartSpec::contains(const Vec3& p) const {
  if (shape == PartShape::Cuboid) {
    return std::abs(p.x()) <= length / 2.0 && std::abs(p.y()) <= width / 2.0 &&
           std::abs(p.z()) <= height / 2.0;
  }
  const double half = capsule_segment(*this) / 2.0;
  const double dx = std::max(std::abs(p.x()) - half, 0.0);
  const double r = width / 2.0;
  return dx * dx + p.y() * p.y() + p.z() * p.z() <= r * r;
}

void SampleRanges::validate() const {
  check_range(handle_length, "handle_length");
  check_range(handle_width, "handle_width");
  check_range(head_length, "head_length");
  check_range(head_width, "head_width");
  check_range(density_low, "density_low");
  check_range(density_high, "density_high");
  if (handle_length.min <= 0 || handle_width.min <= 0 || head_length.min <= 0 ||
      head_width.min <= 0) {
    throw ValidationError("sample ranges: dimensions must be > 0");
  }
  if (density_low.min < 0 || density_high.min < 0) {
    throw ValidationError("sample ranges: densities must be >= 0");
  }
  if (!(capsule_probability >= 0.0 && capsule_probability <= 1.0)) {
    throw ValidationError("sample ranges: capsule_probability must be in [0,1]");
  }
}

Pose head_offset_for(const PartSpec& handle) {
  const double tip = std::max(handle.length, handle.shape == PartShape::Capsule ? handle.width : 0.0);
  return {Vec3(tip / 2.0, 0.0, 0.0), quat_from_axis_angle(Vec3::UnitZ(), kPi / 2.0)};
}

MassProperties mass_properties(const PartSpec& handle, const PartSpec& head,
                               const Pose& head_offset) {
  handle.validate("handle");
  head.validate("head");
  const double m1 = handle.mass();
  const double m2 = head.mass();
  MassProperties out;
  out.mass = m1 + m2;
  if (out.mass <= 0.0) throw ValidationError("tool mass must be > 0");
  const Vec3 c1 = Vec3::Zero();
  const Vec3 c2 = head_offset.translation;
  out.com = (m1 * c1 + m2 * c2) / out.mass;

  auto shifted = [&](const Mat3& I_local, const Mat3& R, double m, const Vec3& c) {
    const Vec3 d = c - out.com;
    return Mat3(R * I_local * R.transpose() +
                m * (d.squaredNorm() * Mat3::Identity() - d * d.transpose()));
  };
  out.inertia = shifted(handle.inertia(), Mat3::Identity(), m1, c1) +
                shifted(head.inertia(), head_offset.rotation_matrix(), m2, c2);
  out.inertia = 0.5 * (out.inertia + out.inertia.transpose()).eval();
  return out;
}

ToolSpec make_tool(const PartSpec& handle, const PartSpec& head, std::uint64_t seed) {
  ToolSpec t;
  t.seed = seed;
  t.handle = handle;
  t.head = head;
  t.head_offset = head_offset_for(handle);
  const MassProperties mp = mass_properties(handle, head, t.head_offset);
  t.mass = mp.mass;
  t.com = mp.com;
  t.inertia = mp.inertia;
  const double handle_len =
      std::max(handle.length, handle.shape == PartShape::Capsule ? handle.width : 0.0);
  t.grasp_box.center = Vec3::Zero();
  t.grasp_box.extents = Vec3(handle_len, handle.width, handle.height);
  return t;
}

ToolSpec sample_tool(Rng& rng, const SampleRanges& ranges, std::uint64_t seed_tag) {
  ranges.validate();
  const PartSpec handle = sample_part(rng, ranges.capsule_probability, ranges.handle_length,
                                      ranges.handle_width, ranges.density_low);
  const PartSpec head = sample_part(rng, ranges.capsule_probability, ranges.head_length,
                                    ranges.head_width, ranges.density_high);
  return make_tool(handle, head, seed_tag);
}

ToolSpec sample_tool(std::uint64_t seed, const SampleRanges& ranges) {
  Rng rng(derive_seed(seed, "tool"));
  return sample_tool(rng, ranges, seed);
}

GraspFrame derive_grasp_bbox(const std::vector<Vec3>& handle_points,
                             const std::vector<Vec3>& head_points, const Vec3& world_up) {
  auto check_cloud = [](const std::vector<Vec3>& pts, const char* name) {
    if (pts.size() < 3) throw ValidationError(std::string(name) + ": need at least 3 points");
    const Vec3& p0 = pts.front();
    std::size_t far = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (!pts[i].allFinite()) throw ValidationError(std::string(name) + ": non-finite point");
      const double d = (pts[i] - p0).squaredNorm();
      if (d > best) {
        best = d;
        far = i;
      }
    }
    const Vec3 axis = pts[far] - p0;
    double spread = 0.0;
    for (const auto& p : pts) spread = std::max(spread, (p - p0).cross(axis).norm());
    if (best <= 0.0 || spread <= 1e-12 * best) {
      throw ValidationError(std::string(name) + ": points are collinear");
    }
  };
  check_cloud(handle_points, "handle points");
  check_cloud(head_points, "head points");

  auto centroid = [](const std::vector<Vec3>& pts) {
    Vec3 c = Vec3::Zero();
    for (const auto& p : pts) c += p;
    return Vec3(c / static_cast<double>(pts.size()));
  };
  const Vec3 ch = centroid(handle_points);
  const Vec3 cd = centroid(head_points);
  const Vec3 dir = cd - ch;
  if (dir.norm() < 1e-3) {
    throw ValidationError("ambiguous orientation: handle and head centroids coincide");
  }
  const Vec3 x = dir.normalized();
  Vec3 up = world_up.normalized();
  if (std::abs(up.dot(x)) > 0.99) up = Vec3::UnitY();
  const Vec3 z = (up - up.dot(x) * x).normalized();
  const Vec3 y = z.cross(x);
  Mat3 R;
  R.col(0) = x;
  R.col(1) = y;
  R.col(2) = z;

  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const auto& p : handle_points) {
    const Vec3 local = R.transpose() * (p - ch);
    lo = lo.cwiseMin(local);
    hi = hi.cwiseMax(local);
  }
  GraspFrame out;
  out.frame.translation = ch;
  out.frame.rotation = Quat(R).normalized();
  out.box.center = ch;
  out.box.extents = hi - lo;
  return out;
}

TriangleMesh tessellate(const ToolSpec& tool, int segments) {
  if (segments < 4) throw ValidationError("tessellation segments must be >= 4");
  TriangleMesh mesh;
  auto add_part = [&](const PartSpec& part, const Pose& pose) {
    const int base = static_cast<int>(mesh.vertices.size());
    if (part.shape == PartShape::Cuboid) {
      const Vec3 h = part.half_extents();
      for (int i = 0; i < 8; ++i) {
        const Vec3 v((i & 1 ? 1 : -1) * h.x(), (i & 2 ? 1 : -1) * h.y(), (i & 4 ? 1 : -1) * h.z());
        mesh.vertices.push_back(pose.apply(v));
      }
      static constexpr int faces[12][3] = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6},
                                           {0, 1, 4}, {1, 5, 4}, {2, 6, 3}, {3, 6, 7},
                                           {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
      for (const auto& f : faces) mesh.triangles.push_back({base + f[0], base + f[1], base + f[2]});
      return;
    }
    // Capsule: rings from the -x pole to the +x pole.
    const double r = part.width / 2.0;
    const double half = capsule_segment(part) / 2.0;
    const int cap_steps = std::max(2, segments / 4);
    std::vector<std::pair<double, double>> rings;  // (x, radius)
    for (int i = 1; i <= cap_steps; ++i) {
      const double phi = -kPi / 2.0 + kPi / 2.0 * i / cap_steps;
      rings.emplace_back(-half + r * std::sin(phi), r * std::cos(phi));
    }
    for (int i = 0; i < cap_steps; ++i) {
      const double phi = kPi / 2.0 * i / cap_steps;
      rings.emplace_back(half + r * std::sin(phi), r * std::cos(phi));
    }
    mesh.vertices.push_back(pose.apply(Vec3(-half - r, 0, 0)));
    for (const auto& [x, rad] : rings) {
      for (int k = 0; k < segments; ++k) {
        const double a = 2.0 * kPi * k / segments;
        mesh.vertices.push_back(pose.apply(Vec3(x, rad * std::cos(a), rad * std::sin(a))));
      }
    }
    mesh.vertices.push_back(pose.apply(Vec3(half + r, 0, 0)));
    const int south = base;
    const int north = static_cast<int>(mesh.vertices.size()) - 1;
    auto ring_vertex = [&](int ring, int k) { return base + 1 + ring * segments + (k % segments); };
    const int n_rings = static_cast<int>(rings.size());
    for (int k = 0; k < segments; ++k) {
      mesh.triangles.push_back({south, ring_vertex(0, k + 1), ring_vertex(0, k)});
      mesh.triangles.push_back({north, ring_vertex(n_rings - 1, k), ring_vertex(n_rings - 1, k + 1)});
    }
    for (int ring = 0; ring + 1 < n_rings; ++ring) {
      for (int k = 0; k < segments; ++k) {
        const int a = ring_vertex(ring, k), b = ring_vertex(ring, k + 1);
        const int c = ring_vertex(ring + 1, k), d = ring_vertex(ring + 1, k + 1);
        mesh.triangles.push_back({a, b, d});
        mesh.triangles.push_back({a, d, c});
      }
    }
  };
  add_part(tool.handle, Pose::identity());
  add_part(tool.head, tool.head_offset);
  return mesh;
}

json tool_to_json(const ToolSpec& tool, int mesh_segments) {
  json inertia = json::array();
  for (int r = 0; r < 3; ++r) {
    inertia.push_back({tool.inertia(r, 0), tool.inertia(r, 1), tool.inertia(r, 2)});
  }
  json j = {{"seed", tool.seed},
            {"handle", part_to_json(tool.handle)},
            {"head", part_to_json(tool.head)},
            {"head_offset", to_json(tool.head_offset)},
            {"mass", tool.mass},
            {"com", to_json(tool.com)},
            {"inertia", inertia},
            {"grasp_box",
             {{"center", to_json(tool.grasp_box.center)},
              {"extents", to_json(tool.grasp_box.extents)}}}};
  if (mesh_segments > 0) {
    const TriangleMesh mesh = tessellate(tool, mesh_segments);
    json verts = json::array();
    for (const auto& v : mesh.vertices) verts.push_back(to_json(v));
    json tris = json::array();
    for (const auto& t : mesh.triangles) tris.push_back({t[0], t[1], t[2]});
    j["mesh"] = {{"segments", mesh_segments}, {"vertices", verts}, {"triangles", tris}};
  }
  return j;
}

ToolSpec tool_from_json(const json& j) {
  const std::string ctx = "tool";
  if (!j.is_object()) throw ValidationError("tool: expected a JSON object");
  ToolSpec t;
  const json& seed = require_field(j, "seed", ctx);
  if (!seed.is_number_integer()) throw ValidationError("tool.seed: expected an integer");
  t.seed = seed.get<std::uint64_t>();
  t.handle = part_from_json(require_field(j, "handle", ctx), "tool.handle");
  t.head = part_from_json(require_field(j, "head", ctx), "tool.head");
  t.head_offset = pose_from_json(require_field(j, "head_offset", ctx), "tool.head_offset");
  t.mass = require_number(j, "mass", ctx);
  if (!(t.mass > 0.0)) throw ValidationError("tool.mass: must be > 0");
  t.com = vec3_from_json(require_field(j, "com", ctx), "tool.com");
  const json& inertia = require_field(j, "inertia", ctx);
  if (!inertia.is_array() || inertia.size() != 3) {
    throw ValidationError("tool.inertia: expected a 3x3 array");
  }
  for (int r = 0; r < 3; ++r) {
    t.inertia.row(r) = vec3_from_json(inertia[r], "tool.inertia").transpose();
  }
  if (!t.inertia.isApprox(t.inertia.transpose(), 1e-12)) {
    throw ValidationError("tool.inertia: must be symmetric");
  }
  const json& box = require_field(j, "grasp_box", ctx);
  t.grasp_box.center = vec3_from_json(require_field(box, "center", "tool.grasp_box"),
                                      "tool.grasp_box.center");
  t.grasp_box.extents = vec3_from_json(require_field(box, "extents", "tool.grasp_box"),
                                       "tool.grasp_box.extents");
  if (!(t.grasp_box.extents.array() > 0.0).all()) {
    throw ValidationError("tool.grasp_box.extents: must be > 0");
  }
  return t;
}

void export_tool(const ToolSpec& tool, const std::filesystem::path& path, int mesh_segments) {
  write_text_file_atomic(path, tool_to_json(tool, mesh_segments).dump(2) + "\n");
}

ToolSpec import_tool(const std::filesystem::path& path) {
  return tool_from_json(parse_json_file(path));
}

}  // namespace toolforge
