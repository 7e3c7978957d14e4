#pragma once

#include <filesystem>
#include <stdexcept>

#include <json.hpp>

#include "billiards/geometry.hpp"

namespace billiards {

/// Malformed table document (unknown fields, wrong types, missing keys).
class SpecError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Declarative table document:
/// {"family": ..., "components": [{"kind":"arc","center":[x,y],"radius":R,"start_angle":a0,
///  "end_angle":a1,"orientation":"dispersing"|"focusing"} | {"kind":"segment","a":[x,y],"b":[x,y]}]}
TableSpec table_spec_from_json(const nlohmann::json& doc);
nlohmann::json table_spec_to_json(const TableSpec& spec);

/// Validates the document and builds the table; flower documents must pass the flower
/// conditions. Throws SpecError or TableError.
BilliardTable table_from_json(const nlohmann::json& doc);

/// Throws std::runtime_error when the file cannot be read.
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace billiards
