#include "draco/cli/schema.hpp"

#include <map>

#include "draco/error.hpp"

namespace draco::cli {

using nlohmann::json;

// Defined in the generated embedded_schemas.cpp.
extern const std::map<std::string, std::string_view>& embedded_schema_sources();

namespace {

bool has_type(const json& v, const std::string& type) {
  if (type == "object") return v.is_object();
  if (type == "array") return v.is_array();
  if (type == "string") return v.is_string();
  if (type == "boolean") return v.is_boolean();
  if (type == "null") return v.is_null();
  if (type == "number") return v.is_number();
  if (type == "integer") {
    if (v.is_number_integer()) return true;
    return v.is_number_float() && v.get<double>() == static_cast<double>(static_cast<long long>(v.get<double>()));
  }
  return false;
}

class Validator {
 public:
  explicit Validator(const json& root) : root_(root) {}

  void check(const json& schema, const json& v, const std::string& at) {
    if (schema.contains("$ref")) {
      check(resolve(schema.at("$ref").get<std::string>()), v, at);
      return;
    }
    if (schema.contains("type")) {
      const json& t = schema.at("type");
      bool ok = false;
      if (t.is_string()) {
        ok = has_type(v, t.get<std::string>());
      } else {
        for (const auto& alt : t) ok = ok || has_type(v, alt.get<std::string>());
      }
      if (!ok) {
        fail(at, "expected type " + t.dump() + ", got " + v.dump());
        return;
      }
    }
    if (schema.contains("enum")) {
      bool found = false;
      for (const auto& e : schema.at("enum")) found = found || e == v;
      if (!found) fail(at, v.dump() + " is not one of " + schema.at("enum").dump());
    }
    if (v.is_number()) {
      const double x = v.get<double>();
      if (schema.contains("minimum") && x < schema["minimum"].get<double>()) {
        fail(at, v.dump() + " < minimum " + schema["minimum"].dump());
      }
      if (schema.contains("maximum") && x > schema["maximum"].get<double>()) {
        fail(at, v.dump() + " > maximum " + schema["maximum"].dump());
      }
      if (schema.contains("exclusiveMinimum") && x <= schema["exclusiveMinimum"].get<double>()) {
        fail(at, v.dump() + " must be > " + schema["exclusiveMinimum"].dump());
      }
      if (schema.contains("exclusiveMaximum") && x >= schema["exclusiveMaximum"].get<double>()) {
        fail(at, v.dump() + " must be < " + schema["exclusiveMaximum"].dump());
      }
    }
    if (v.is_array()) {
      if (schema.contains("minItems") && v.size() < schema["minItems"].get<std::size_t>()) {
        fail(at, "needs at least " + schema["minItems"].dump() + " items");
      }
      if (schema.contains("maxItems") && v.size() > schema["maxItems"].get<std::size_t>()) {
        fail(at, "allows at most " + schema["maxItems"].dump() + " items");
      }
      if (schema.contains("items")) {
        for (std::size_t i = 0; i < v.size(); ++i) check(schema["items"], v[i], at + "/" + std::to_string(i));
      }
    }
    if (v.is_object()) {
      if (schema.contains("required")) {
        for (const auto& key : schema["required"]) {
          if (!v.contains(key.get<std::string>())) fail(at, "missing required field " + key.dump());
        }
      }
      const json empty = json::object();
      const json& props = schema.contains("properties") ? schema["properties"] : empty;
      for (const auto& [key, child] : v.items()) {
        if (props.contains(key)) {
          check(props[key], child, at + "/" + key);
        } else if (schema.contains("additionalProperties")) {
          const json& extra = schema["additionalProperties"];
          if (extra.is_boolean() && !extra.get<bool>()) {
            fail(at, "unknown field \"" + key + "\"");
          } else if (extra.is_object()) {
            check(extra, child, at + "/" + key);
          }
        }
      }
    }
  }

  std::vector<std::string> errors;

 private:
  const json& resolve(const std::string& ref) {
    if (ref.rfind("#/", 0) != 0) throw Error(ErrorCode::kConfigError, "unsupported $ref " + ref);
    return root_.at(json::json_pointer(ref.substr(1)));
  }

  void fail(const std::string& at, const std::string& message) {
    errors.push_back((at.empty() ? std::string("/") : at) + ": " + message);
  }

  const json& root_;
};

}  // namespace

std::vector<std::string> schema_violations(const json& schema, const json& value) {
  Validator v(schema);
  v.check(schema, value, "");
  return std::move(v.errors);
}

const json& builtin_schema(std::string_view name) {
  static const std::map<std::string, json> schemas = [] {
    std::map<std::string, json> out;
    for (const auto& [key, text] : embedded_schema_sources()) out.emplace(key, json::parse(text));
    return out;
  }();
  const auto it = schemas.find(std::string(name));
  if (it == schemas.end()) throw Error(ErrorCode::kConfigError, "no schema named " + std::string(name));
  return it->second;
}

void require_valid(const json& value, std::string_view schema_name) {
  const auto errors = schema_violations(builtin_schema(schema_name), value);
  if (errors.empty()) return;
  std::string message = std::string(schema_name) + " config does not match its schema:";
  for (const auto& e : errors) message += "\n  " + e;
  throw Error(ErrorCode::kConfigError, message);
}

}  // namespace draco::cli
