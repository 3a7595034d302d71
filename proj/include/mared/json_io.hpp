#pragma once

// JSON building blocks shared by the codec, the session service and the CLI.

#include <json.hpp>
#include <stdexcept>
#include <string>

#include "mared/model.hpp"
#include "mared/playback.hpp"

namespace mared::json_io {

using nlohmann::json;

/// Thrown by the field readers; `path` locates the offending value.
class SchemaError : public std::runtime_error {
 public:
  SchemaError(const std::string& path, const std::string& message)
      : std::runtime_error(path + ": " + message), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

/// Canonical text: sorted keys, shortest round-trip numbers. `indent` < 0
/// gives a single line.
std::string dump(const json& value, int indent = -1);

const json& field(const json& object, const char* key, const std::string& path);
const json* optional_field(const json& object, const char* key);
double number(const json& value, const std::string& path);
std::string string(const json& value, const std::string& path);
bool boolean(const json& value, const std::string& path);
const json& array(const json& value, const std::string& path);
const json& object(const json& value, const std::string& path);
void expect_keys(const json& object, std::initializer_list<const char*> allowed,
                 const std::string& path);

json to_json(const Vec3& v);
Vec3 vec3_from(const json& j, const std::string& path);
json to_json(const Pose& p);
Pose pose_from(const json& j, const std::string& path);
json to_json(const SpaceAnchors& anchors);
SpaceAnchors anchors_from(const json& j, const std::string& path);

json to_json(const SessionEvent& e);
json to_json(const PlaybackState& s);
json to_json(const InteractionInput& input);
/// Reads {"kind", "payload"?, "target"?, "wallTime"?}; a missing wallTime
/// reads as `default_wall`.
InteractionInput input_from(const json& j, const std::string& path,
                            double default_wall = 0.0);
json to_json(const PlaybackConfig& c);

}  // namespace mared::json_io
