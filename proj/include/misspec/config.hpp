#pragma once

#include <string>

#include <json.hpp>

namespace misspec {

// Parses a configuration document. JSON is detected by a leading '{' or '[';
// anything else is treated as TOML. Both forms map onto the same tree.
nlohmann::json parse_config_text(const std::string& text);

// Minimal TOML reader covering the configuration schema: top-level and
// nested [tables], [[arrays of tables]], key = value with strings, numbers,
// booleans, arrays and inline tables, plus # comments.
nlohmann::json parse_toml(const std::string& text);

// 64-bit FNV-1a over the canonical (sorted-key) JSON serialization.
std::string config_digest(const nlohmann::json& doc);

}  // namespace misspec
