#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "toolforge/geometry.hpp"
#include "toolforge/rng.hpp"

namespace toolforge {

enum class PartShape { Cuboid, Capsule };

std::string to_string(PartShape s);
PartShape part_shape_from_string(const std::string& s);

/// One primitive of a tool. The long axis is the part's local x.
/// For capsules width == height == diameter and length is measured tip to tip.
struct PartSpec {
  PartShape shape = PartShape::Cuboid;
  double length = 0.1;
  double width = 0.02;
  double height = 0.02;
  double density = 500.0;

  void validate(const std::string& field) const;
  double volume() const;
  double mass() const { return density * volume(); }
  /// Inertia about the part centroid in the part frame.
  Mat3 inertia() const;
  /// Point-membership test in the part frame (used by the integration oracle
  /// and for tessellation bounds).
  bool contains(const Vec3& p) const;
  Vec3 half_extents() const { return {length / 2.0, width / 2.0, height / 2.0}; }

  bool operator==(const PartSpec&) const = default;
};

struct GraspBox {
  Vec3 center = Vec3::Zero();
  Vec3 extents = Vec3::Ones();
};

struct MassProperties {
  double mass = 0.0;
  Vec3 com = Vec3::Zero();
  Mat3 inertia = Mat3::Zero();  // about com, object frame
};

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
};

/// A handle-head tool. The object frame is the handle frame: origin at the
/// handle centroid, +x along the handle toward the head.
struct ToolSpec {
  std::uint64_t seed = 0;
  PartSpec handle;
  PartSpec head;
  Pose head_offset;
  double mass = 0.0;
  Vec3 com = Vec3::Zero();
  Mat3 inertia = Mat3::Zero();
  GraspBox grasp_box;
};

struct Range {
  double min = 0.0;
  double max = 0.0;
};

struct SampleRanges {
  Range handle_length{0.05, 0.30};
  Range handle_width{0.01, 0.04};
  Range head_length{0.01, 0.15};
  Range head_width{0.005, 0.12};
  Range density_low{300.0, 600.0};
  Range density_high{300.0, 2000.0};
  double capsule_probability = 0.5;

  void validate() const;
};

/// Standard head placement: centroid at the handle tip, long axis along
/// object y (90 degrees about z relative to the handle).
Pose head_offset_for(const PartSpec& handle);

/// Composite mass, centre of mass and inertia about the centre of mass.
/// A capsule shorter than its diameter degrades to a sphere of that diameter.
MassProperties mass_properties(const PartSpec& handle, const PartSpec& head,
                               const Pose& head_offset);

/// Draws one tool. Shapes are independent fair coin flips per part;
/// dimensions and densities are uniform within `ranges`.
ToolSpec sample_tool(Rng& rng, const SampleRanges& ranges, std::uint64_t seed_tag = 0);
ToolSpec sample_tool(std::uint64_t seed, const SampleRanges& ranges = {});

/// Builds a tool (head offset, mass properties, grasp box) from two parts.
ToolSpec make_tool(const PartSpec& handle, const PartSpec& head, std::uint64_t seed = 0);

struct GraspFrame {
  GraspBox box;  // center in world frame, extents along the new frame axes
  Pose frame;    // object frame in world: origin at handle centroid
};

/// Grasp box from labeled part point clouds: centred at the handle centroid,
/// x from handle centroid toward head centroid, z from world up by
/// Gram-Schmidt (world y when x is nearly vertical).
GraspFrame derive_grasp_bbox(const std::vector<Vec3>& handle_points,
                             const std::vector<Vec3>& head_points,
                             const Vec3& world_up = Vec3::UnitZ());

/// Surface mesh of both parts in the object frame. `segments` controls
/// capsule tessellation resolution (>= 4).
TriangleMesh tessellate(const ToolSpec& tool, int segments = 16);

nlohmann::json tool_to_json(const ToolSpec& tool, int mesh_segments = 0);
ToolSpec tool_from_json(const nlohmann::json& j);

void export_tool(const ToolSpec& tool, const std::filesystem::path& path, int mesh_segments = 16);
ToolSpec import_tool(const std::filesystem::path& path);

}  // namespace toolforge
