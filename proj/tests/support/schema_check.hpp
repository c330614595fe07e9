#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace lucid::test {

// A small validator covering the JSON Schema subset the shipped schemas use:
// type, required, properties, additionalProperties, items, enum, minimum,
// minItems. Returns an empty string on success, else "<pointer>: <problem>".
std::string schema_validate(const nlohmann::json &schema, const nlohmann::json &value);

// Loads a schema from LUCID_SCHEMA_DIR and validates; empty string = ok.
std::string validate_against(const std::string &schema_file, const nlohmann::json &value);

} // namespace lucid::test
