#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace corrproj::io {

/// Writes `content` to a sibling temporary file and renames it over `path`,
/// so readers never observe a partially written file.
void write_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_text(const std::filesystem::path& path);

nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

/// 64-bit FNV-1a, rendered as 16 lowercase hex digits.
std::string digest(std::string_view bytes);

/// Checks the `format` and `version` fields of a versioned document.
void expect_format(const nlohmann::json& doc, std::string_view format, int version);

} // namespace corrproj::io
