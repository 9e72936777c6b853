#include "ledsync/json_util.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace ledsync::json_util {

const Json& Field(const Json& j, const std::string& key,
                  const std::string& path) {
  if (!j.is_object()) throw SchemaError(path.empty() ? "/" : path, "expected object");
  auto it = j.find(key);
  if (it == j.end()) throw SchemaError(Join(path, key), "missing field");
  return *it;
}

double Number(const Json& j, const std::string& path) {
  if (!j.is_number()) throw SchemaError(path, "expected number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw SchemaError(path, "expected finite number");
  return v;
}

std::int64_t Integer(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) throw SchemaError(path, "expected integer");
  return j.get<std::int64_t>();
}

std::string String(const Json& j, const std::string& path) {
  if (!j.is_string()) throw SchemaError(path, "expected string");
  return j.get<std::string>();
}

const Json& Array(const Json& j, const std::string& path,
                  std::size_t expected_size) {
  if (!j.is_array()) throw SchemaError(path, "expected array");
  if (expected_size != 0 && j.size() != expected_size) {
    throw SchemaError(path, "expected " + std::to_string(expected_size) +
                                " elements, got " + std::to_string(j.size()));
  }
  return j;
}

Vec2 Point2(const Json& j, const std::string& path) {
  Array(j, path, 2);
  return {Number(j[0], Join(path, 0)), Number(j[1], Join(path, 1))};
}

std::vector<double> Numbers(const Json& j, const std::string& path,
                            std::size_t expected_size) {
  Array(j, path, expected_size);
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(Number(j[i], Join(path, i)));
  }
  return out;
}

Json ReadFile(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open " + file);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw SchemaError("", file + ": " + e.what());
  }
}

std::vector<Json> ReadLines(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open " + file);
  std::vector<Json> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(Json::parse(line));
    } catch (const Json::parse_error& e) {
      throw SchemaError("/" + std::to_string(line_no - 1),
                        "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace ledsync::json_util
