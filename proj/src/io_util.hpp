#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "kpg/error.hpp"

namespace kpg::detail {

using Json = nlohmann::json;

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_io("cannot open '" + path + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) fail_io("read error on '" + path + "'");
  return buffer.str();
}

inline void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail_io("cannot open '" + path + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) fail_io("write error on '" + path + "'");
}

inline Json parse_json(std::string_view text, std::string_view what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    fail(std::string(what) + ": invalid JSON: " + e.what());
  }
}

/// Canonical text form: sorted keys, two-space indent, trailing newline.
inline std::string dump_json(const Json& value) { return value.dump(2) + "\n"; }

/// Integral doubles are emitted as JSON integers so canonical files never
/// drift between `10` and `10.0`.
inline Json number(double value) {
  if (value == static_cast<double>(static_cast<std::int64_t>(value)) && value > -9.0e15 &&
      value < 9.0e15) {
    return Json(static_cast<std::int64_t>(value));
  }
  return Json(value);
}

inline const Json& field(const Json& object, const char* key, std::string_view what) {
  if (!object.is_object()) fail(std::string(what) + ": expected a JSON object");
  auto it = object.find(key);
  if (it == object.end()) fail(std::string(what) + ": missing field '" + key + "'");
  return *it;
}

inline long long get_int(const Json& object, const char* key, std::string_view what) {
  const Json& v = field(object, key, what);
  if (v.is_number_integer()) return v.get<long long>();
  if (v.is_number_float()) {
    double d = v.get<double>();
    if (d == static_cast<double>(static_cast<long long>(d))) return static_cast<long long>(d);
  }
  fail(std::string(what) + ": field '" + key + "' must be an integer");
}

inline double get_number(const Json& value, std::string_view what) {
  if (!value.is_number()) fail(std::string(what) + ": expected a number");
  return value.get<double>();
}

inline double get_number(const Json& object, const char* key, std::string_view what) {
  return get_number(field(object, key, what), std::string(what) + "." + key);
}

inline std::string get_string(const Json& object, const char* key, std::string_view what) {
  const Json& v = field(object, key, what);
  if (!v.is_string()) fail(std::string(what) + ": field '" + key + "' must be a string");
  return v.get<std::string>();
}

/// Resolves `path` relative to the directory holding `anchor_file`.
inline std::string resolve_relative(const std::string& anchor_file, const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  return (std::filesystem::path(anchor_file).parent_path() / p).lexically_normal().string();
}

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

}  // namespace kpg::detail
