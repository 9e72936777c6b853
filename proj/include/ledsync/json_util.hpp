// Small helpers for reading JSON documents with field-path error reporting.

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ledsync/board.hpp"

namespace ledsync {

using Json = nlohmann::json;

// Raised for malformed inputs. path() is a JSON pointer to the offending
// field, e.g. "/samples/3/1".
class SchemaError : public std::runtime_error {
 public:
  SchemaError(std::string path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(std::move(path)) {}

  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

namespace json_util {

inline std::string Join(const std::string& path, const std::string& key) {
  return path + "/" + key;
}
inline std::string Join(const std::string& path, std::size_t index) {
  return path + "/" + std::to_string(index);
}

const Json& Field(const Json& j, const std::string& key,
                  const std::string& path);
double Number(const Json& j, const std::string& path);
std::int64_t Integer(const Json& j, const std::string& path);
std::string String(const Json& j, const std::string& path);
const Json& Array(const Json& j, const std::string& path,
                  std::size_t expected_size = 0);
Vec2 Point2(const Json& j, const std::string& path);
std::vector<double> Numbers(const Json& j, const std::string& path,
                            std::size_t expected_size);

Json ReadFile(const std::string& file);
// Parses one JSON document per non-empty line.
std::vector<Json> ReadLines(const std::string& file);

}  // namespace json_util
}  // namespace ledsync
