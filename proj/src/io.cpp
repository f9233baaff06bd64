#include "toolforge/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "toolforge/errors.hpp"

namespace toolforge {

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

json parse_json_text(std::string_view text, const std::string& origin) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // byte offset -> line:col
    const std::size_t pos = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < pos; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " +
                     e.what());
  }
}

json parse_json_file(const std::filesystem::path& path) {
  return parse_json_text(read_text_file(path), path.string());
}

const json& require_field(const json& j, const std::string& key, const std::string& ctx) {
  if (!j.is_object()) throw ValidationError(ctx + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ValidationError(ctx + "." + key + ": missing field");
  return *it;
}

double require_number(const json& j, const std::string& key, const std::string& ctx) {
  const json& v = require_field(j, key, ctx);
  if (!v.is_number()) throw ValidationError(ctx + "." + key + ": expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ValidationError(ctx + "." + key + ": not finite");
  return d;
}

Vec3 vec3_from_json(const json& j, const std::string& ctx) {
  if (!j.is_array() || j.size() != 3) throw ValidationError(ctx + ": expected 3 numbers");
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    if (!j[i].is_number()) throw ValidationError(ctx + ": expected 3 numbers");
    v[i] = j[i].get<double>();
  }
  if (!v.allFinite()) throw ValidationError(ctx + ": not finite");
  return v;
}

Pose pose_from_json(const json& j, const std::string& ctx) {
  if (!j.is_array() || j.size() != 7) {
    throw ValidationError(ctx + ": expected pose [tx,ty,tz,qw,qx,qy,qz]");
  }
  std::array<double, 7> v{};
  for (std::size_t i = 0; i < 7; ++i) {
    if (!j[i].is_number()) throw ValidationError(ctx + ": pose entries must be numbers");
    v[i] = j[i].get<double>();
  }
  try {
    return Pose::from_array(v);
  } catch (const ValidationError& e) {
    throw ValidationError(ctx + ": " + e.what());
  }
}

json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json to_json(const Pose& p) {
  const auto a = p.to_array();
  return json(std::vector<double>(a.begin(), a.end()));
}

}  // namespace toolforge
