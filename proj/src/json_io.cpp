#include "mared/json_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "mared/codec.hpp"

namespace mared {

std::string format_number(double value) {
  if (value == 0.0) return "0";
  char buffer[64];
  auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

}  // namespace mared

namespace mared::json_io {

namespace {

void newline(std::string& out, int indent, int depth) {
  if (indent < 0) return;
  out += '\n';
  out.append(static_cast<std::size_t>(indent * depth), ' ');
}

void write(std::string& out, const json& v, int indent, int depth) {
  switch (v.type()) {
    case json::value_t::boolean:
      out += v.get<bool>() ? "true" : "false";
      return;
    case json::value_t::number_integer:
      out += std::to_string(v.get<std::int64_t>());
      return;
    case json::value_t::number_unsigned:
      out += std::to_string(v.get<std::uint64_t>());
      return;
    case json::value_t::number_float:
      out += format_number(v.get<double>());
      return;
    case json::value_t::string:
      out += v.dump(-1, ' ', false, json::error_handler_t::replace);
      return;
    case json::value_t::array: {
      if (v.empty()) {
        out += "[]";
        return;
      }
      out += '[';
      bool first = true;
      for (const auto& item : v) {
        if (!first) out += ',';
        first = false;
        newline(out, indent, depth + 1);
        write(out, item, indent, depth + 1);
      }
      newline(out, indent, depth);
      out += ']';
      return;
    }
    case json::value_t::object: {
      if (v.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (const auto& [key, item] : v.items()) {
        if (!first) out += ',';
        first = false;
        newline(out, indent, depth + 1);
        out += json(key).dump(-1, ' ', false, json::error_handler_t::replace);
        out += indent < 0 ? ":" : ": ";
        write(out, item, indent, depth + 1);
      }
      newline(out, indent, depth);
      out += '}';
      return;
    }
    default:
      out += "null";
      return;
  }
}

}  // namespace

std::string dump(const json& value, int indent) {
  std::string out;
  write(out, value, indent, 0);
  return out;
}

const json& field(const json& object, const char* key, const std::string& path) {
  auto it = object.find(key);
  if (it == object.end()) throw SchemaError(path + "." + key, "missing field");
  return *it;
}

const json* optional_field(const json& object, const char* key) {
  auto it = object.find(key);
  return it == object.end() || it->is_null() ? nullptr : &*it;
}

double number(const json& value, const std::string& path) {
  if (!value.is_number()) throw SchemaError(path, "expected a number");
  const double d = value.get<double>();
  if (!std::isfinite(d)) throw SchemaError(path, "number out of range");
  return d;
}

std::string string(const json& value, const std::string& path) {
  if (!value.is_string()) throw SchemaError(path, "expected a string");
  return value.get<std::string>();
}

bool boolean(const json& value, const std::string& path) {
  if (!value.is_boolean()) throw SchemaError(path, "expected a boolean");
  return value.get<bool>();
}

const json& array(const json& value, const std::string& path) {
  if (!value.is_array()) throw SchemaError(path, "expected an array");
  return value;
}

const json& object(const json& value, const std::string& path) {
  if (!value.is_object()) throw SchemaError(path, "expected an object");
  return value;
}

void expect_keys(const json& obj, std::initializer_list<const char*> allowed,
                 const std::string& path) {
  object(obj, path);
  for (const auto& [key, _] : obj.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* a) { return key == a; });
    if (!known) throw SchemaError(path + "." + key, "unknown field");
  }
}

json to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

Vec3 vec3_from(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3) throw SchemaError(path, "expected [x, y, z]");
  return {number(j[0], path + "[0]"), number(j[1], path + "[1]"),
          number(j[2], path + "[2]")};
}

json to_json(const Pose& p) {
  const Quat& q = p.orientation;
  return {{"position", to_json(p.position)},
          {"orientation", json::array({q.w, q.x, q.y, q.z})}};
}

Pose pose_from(const json& j, const std::string& path) {
  expect_keys(j, {"position", "orientation"}, path);
  Pose p;
  p.position = vec3_from(field(j, "position", path), path + ".position");
  const json& q = field(j, "orientation", path);
  const std::string qpath = path + ".orientation";
  if (!q.is_array() || q.size() != 4) throw SchemaError(qpath, "expected [w, x, y, z]");
  p.orientation = {number(q[0], qpath + "[0]"), number(q[1], qpath + "[1]"),
                   number(q[2], qpath + "[2]"), number(q[3], qpath + "[3]")};
  return p;
}

json to_json(const SpaceAnchors& anchors) {
  json out = json::array();
  for (const auto& a : anchors) out.push_back({{"id", a.id}, {"pose", to_json(a.pose)}});
  return out;
}

SpaceAnchors anchors_from(const json& j, const std::string& path) {
  SpaceAnchors out;
  std::size_t i = 0;
  for (const auto& a : array(j, path)) {
    const std::string p = path + "[" + std::to_string(i++) + "]";
    expect_keys(a, {"id", "pose"}, p);
    out.push_back({string(field(a, "id", p), p + ".id"),
                   pose_from(field(a, "pose", p), p + ".pose")});
  }
  return out;
}

namespace {

json to_json(const DetailValue& v) {
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  return std::get<double>(v);
}

}  // namespace

json to_json(const SessionEvent& e) {
  json details = json::object();
  for (const auto& [k, v] : e.details) details[k] = to_json(v);
  return {{"wallTime", e.wall_time},
          {"expTime", e.exp_time},
          {"type", e.type},
          {"details", details}};
}

json to_json(const PlaybackState& s) {
  json out = {{"wallTime", s.wall_time},
              {"expTime", s.exp_time},
              {"mode", std::string(to_string(s.mode))},
              {"rate", s.rate},
              {"activeEvents", s.active_events},
              {"keyframesPassed", s.keyframes_passed}};
  if (s.branch_id) out["branchId"] = *s.branch_id;
  return out;
}

json to_json(const InteractionInput& input) {
  json out = {{"wallTime", input.wall_time},
              {"kind", std::string(to_string(input.kind))},
              {"payload", input.payload}};
  if (input.target) out["target"] = *input.target;
  return out;
}

InteractionInput input_from(const json& j, const std::string& path,
                            double default_wall) {
  expect_keys(j, {"wallTime", "kind", "payload", "target"}, path);
  InteractionInput input;
  input.wall_time = default_wall;
  if (const json* w = optional_field(j, "wallTime")) {
    input.wall_time = number(*w, path + ".wallTime");
  }
  const std::string kind = string(field(j, "kind", path), path + ".kind");
  const auto parsed = parse_input_kind(kind);
  if (!parsed) throw SchemaError(path + ".kind", "unknown input kind '" + kind + "'");
  input.kind = *parsed;
  if (const json* p = optional_field(j, "payload")) {
    input.payload = string(*p, path + ".payload");
  }
  if (const json* t = optional_field(j, "target")) {
    input.target = string(*t, path + ".target");
  }
  return input;
}

json to_json(const PlaybackConfig& c) {
  return {{"baseRate", c.base_rate},
          {"postBranchSlowdown", c.post_branch_slowdown},
          {"resumePolicy", std::string(to_string(c.resume_policy))},
          {"branchGrace", c.branch_grace},
          {"allowScale", c.allow_scale}};
}

}  // namespace mared::json_io
