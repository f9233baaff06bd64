#pragma once

#include <cmath>
#include <filesystem>
#include <string>

#include <doctest.h>

#include "toolforge/geometry.hpp"
#include "toolforge/rng.hpp"

namespace toolforge::test {

inline std::filesystem::path fixture(const std::string& rel) {
  return std::filesystem::path(TOOLFORGE_FIXTURE_DIR) / rel;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("toolforge_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline Pose random_pose(Rng& rng, double extent = 1.0) {
  Pose p;
  for (int i = 0; i < 3; ++i) p.translation[i] = rng.uniform(-extent, extent);
  p.rotation = random_rotation(rng);
  return p;
}

inline bool near_pose(const Pose& a, const Pose& b, double tol) {
  return (a.translation - b.translation).norm() <= tol && rotation_angle(a.rotation, b.rotation) <= tol;
}

}  // namespace toolforge::test
