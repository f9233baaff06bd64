#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "toolforge/geometry.hpp"

namespace toolforge {

using json = nlohmann::json;

std::string read_text_file(const std::filesystem::path& path);

/// Writes via a sibling temp file and rename, so readers never see a
/// partially written output.
void write_text_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Parses JSON text; syntax errors become ParseError("<origin>:<line>:<col>: ...").
json parse_json_text(std::string_view text, const std::string& origin);
json parse_json_file(const std::filesystem::path& path);

/// Accessors that raise ValidationError naming `ctx.key` on a missing or
/// mistyped field.
const json& require_field(const json& j, const std::string& key, const std::string& ctx);
double require_number(const json& j, const std::string& key, const std::string& ctx);
Vec3 vec3_from_json(const json& j, const std::string& ctx);
Pose pose_from_json(const json& j, const std::string& ctx);

json to_json(const Vec3& v);
json to_json(const Pose& p);

}  // namespace toolforge
