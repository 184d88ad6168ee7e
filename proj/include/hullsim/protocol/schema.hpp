#pragma once

#include "hullsim/core/math.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace hullsim::protocol {

// Semantic field types a command schema can declare.
enum class FieldType {
  boolean,
  integer,
  number,
  string,
  vector3,
  string_list,
  id_list,
  object_id,
  frequency,  // "once" | "always" | "never"
};

const char* to_string(FieldType type);

using FieldValue = std::variant<bool, std::int64_t, double, std::string, Vec3,
                                std::vector<std::string>, std::vector<std::int64_t>>;

struct FieldSpec {
  std::string name;
  FieldType type;
  std::optional<FieldValue> default_value;  // only meaningful for optional fields
  std::string doc;
};

struct CommandSchema {
  std::string type_name;
  std::string doc;
  std::vector<FieldSpec> required;
  std::vector<FieldSpec> optional;

  const FieldSpec* find(const std::string& field) const;
};

using Params = std::map<std::string, FieldValue>;

// One `$type`-tagged instruction. `params` holds the fields present on the
// wire; schema defaults are resolved at dispatch time, so decoding and
// re-encoding never adds fields.
struct CommandEnvelope {
  std::string type_name;
  Params params;

  bool operator==(const CommandEnvelope&) const = default;
};

// Validated `$type` -> schema lookup. Immutable once the server starts.
class SchemaRegistry {
 public:
  // Throws DuplicateCommand or SchemaViolation (malformed schema).
  void add(CommandSchema schema);
  const CommandSchema* find(const std::string& type_name) const;
  bool contains(const std::string& type_name) const { return find(type_name) != nullptr; }
  std::vector<std::string> names() const;
  std::size_t size() const { return schemas_.size(); }

 private:
  std::map<std::string, CommandSchema> schemas_;
};

// Field value <-> JSON by declared type. Throws SchemaViolation.
FieldValue field_from_json(const nlohmann::json& j, const FieldSpec& spec);
nlohmann::json field_to_json(const FieldValue& value);

CommandEnvelope envelope_from_json(const nlohmann::json& j, const SchemaRegistry& registry);
nlohmann::json envelope_to_json(const CommandEnvelope& envelope);

// Envelope params merged with schema defaults for absent optional fields.
Params resolve_params(const CommandEnvelope& envelope, const CommandSchema& schema);

// Markdown reference of every registered command, one section per `$type`.
std::string schema_reference_markdown(const SchemaRegistry& registry);

}  // namespace hullsim::protocol
