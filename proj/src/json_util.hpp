#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "druopf/error.hpp"

namespace druopf::detail {

inline const nlohmann::json& require(const nlohmann::json& obj, const char* key, const std::string& ctx) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw Error(ErrorKind::Schema, ctx + ": field '" + key + "' missing");
  }
  return obj.at(key);
}

inline double number(const nlohmann::json& obj, const char* key, const std::string& ctx) {
  const auto& v = require(obj, key, ctx);
  if (!v.is_number()) throw Error(ErrorKind::Schema, ctx + ": field '" + key + "' must be a number");
  return v.get<double>();
}

inline double number_or(const nlohmann::json& obj, const char* key, const std::string& ctx, double fallback) {
  if (!obj.is_object() || !obj.contains(key)) return fallback;
  return number(obj, key, ctx);
}

inline std::string string(const nlohmann::json& obj, const char* key, const std::string& ctx) {
  const auto& v = require(obj, key, ctx);
  if (!v.is_string()) throw Error(ErrorKind::Schema, ctx + ": field '" + key + "' must be a string");
  return v.get<std::string>();
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Schema, "cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::Schema, path + ": " + e.what());
  }
}

}  // namespace druopf::detail
