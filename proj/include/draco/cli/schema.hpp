#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace draco::cli {

// Validates `value` against a JSON schema. Supported keywords: type, enum,
// properties, required, additionalProperties, items, minItems, maxItems,
// minimum, maximum, exclusiveMinimum, exclusiveMaximum and local $ref
// ("#/definitions/..."). Returns one message per violation, each prefixed
// with the JSON pointer of the offending value.
std::vector<std::string> schema_violations(const nlohmann::json& schema, const nlohmann::json& value);

// Schemas compiled into the binary, by name: synth, plains, train, predict, eval.
const nlohmann::json& builtin_schema(std::string_view name);

// Throws config-error listing every violation.
void require_valid(const nlohmann::json& value, std::string_view schema_name);

}  // namespace draco::cli
