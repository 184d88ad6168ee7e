#include "hullsim/protocol/schema.hpp"

#include "hullsim/protocol/errors.hpp"

#include <set>
#include <sstream>

namespace hullsim::protocol {

using nlohmann::json;

const char* to_string(FieldType type) {
  switch (type) {
    case FieldType::boolean: return "bool";
    case FieldType::integer: return "int";
    case FieldType::number: return "float";
    case FieldType::string: return "string";
    case FieldType::vector3: return "Vector3";
    case FieldType::string_list: return "string[]";
    case FieldType::id_list: return "int[]";
    case FieldType::object_id: return "object id";
    case FieldType::frequency: return "frequency";
  }
  return "?";
}

const FieldSpec* CommandSchema::find(const std::string& field) const {
  for (const auto& f : required)
    if (f.name == field) return &f;
  for (const auto& f : optional)
    if (f.name == field) return &f;
  return nullptr;
}

void SchemaRegistry::add(CommandSchema schema) {
  if (schema.type_name.empty()) throw SchemaViolation("schema has an empty type name");
  if (schemas_.contains(schema.type_name)) throw DuplicateCommand(schema.type_name);
  std::set<std::string> seen;
  for (const auto* group : {&schema.required, &schema.optional}) {
    for (const auto& f : *group) {
      if (f.name.empty() || f.name == "$type") {
        throw SchemaViolation(schema.type_name + ": invalid field name '" + f.name + "'");
      }
      if (!seen.insert(f.name).second) {
        throw SchemaViolation(schema.type_name + ": field '" + f.name + "' declared twice");
      }
    }
  }
  auto name = schema.type_name;
  schemas_.emplace(std::move(name), std::move(schema));
}

const CommandSchema* SchemaRegistry::find(const std::string& type_name) const {
  auto it = schemas_.find(type_name);
  return it == schemas_.end() ? nullptr : &it->second;
}

std::vector<std::string> SchemaRegistry::names() const {
  std::vector<std::string> out;
  out.reserve(schemas_.size());
  for (const auto& [name, _] : schemas_) out.push_back(name);
  return out;
}

namespace {

[[noreturn]] void violation(const FieldSpec& spec, const std::string& what) {
  throw SchemaViolation("field '" + spec.name + "' (" + to_string(spec.type) + "): " + what);
}

std::int64_t as_int(const json& j, const FieldSpec& spec) {
  if (j.is_number_unsigned()) {
    const auto u = j.get<std::uint64_t>();
    if (u > static_cast<std::uint64_t>(INT64_MAX)) violation(spec, "integer out of range");
    return static_cast<std::int64_t>(u);
  }
  if (j.is_number_integer()) return j.get<std::int64_t>();
  violation(spec, "expected an integer");
}

}  // namespace

FieldValue field_from_json(const json& j, const FieldSpec& spec) {
  switch (spec.type) {
    case FieldType::boolean:
      if (!j.is_boolean()) violation(spec, "expected a boolean");
      return j.get<bool>();
    case FieldType::integer:
      return as_int(j, spec);
    case FieldType::object_id: {
      const auto v = as_int(j, spec);
      if (v < 0) violation(spec, "object ids are non-negative");
      return v;
    }
    case FieldType::number:
      if (!j.is_number()) violation(spec, "expected a number");
      return j.get<double>();
    case FieldType::string:
      if (!j.is_string()) violation(spec, "expected a string");
      return j.get<std::string>();
    case FieldType::frequency: {
      if (!j.is_string()) violation(spec, "expected a string");
      auto s = j.get<std::string>();
      if (s != "once" && s != "always" && s != "never") violation(spec, "expected once|always|never");
      return s;
    }
    case FieldType::vector3: {
      if (!j.is_object() || j.size() != 3 || !j.contains("x") || !j.contains("y") || !j.contains("z")) {
        violation(spec, "expected {x, y, z}");
      }
      Vec3 v;
      int axis = 0;
      for (const char* key : {"x", "y", "z"}) {
        if (!j[key].is_number()) violation(spec, std::string("component ") + key + " is not a number");
        v[axis++] = j[key].get<double>();
      }
      return v;
    }
    case FieldType::string_list: {
      if (!j.is_array()) violation(spec, "expected an array of strings");
      std::vector<std::string> out;
      for (const auto& e : j) {
        if (!e.is_string()) violation(spec, "expected an array of strings");
        out.push_back(e.get<std::string>());
      }
      return out;
    }
    case FieldType::id_list: {
      if (!j.is_array()) violation(spec, "expected an array of ids");
      std::vector<std::int64_t> out;
      for (const auto& e : j) {
        const auto v = as_int(e, spec);
        if (v < 0) violation(spec, "object ids are non-negative");
        out.push_back(v);
      }
      return out;
    }
  }
  violation(spec, "unsupported type");
}

json field_to_json(const FieldValue& value) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Vec3>) {
          return json{{"x", v.x()}, {"y", v.y()}, {"z", v.z()}};
        } else {
          return json(v);
        }
      },
      value);
}

CommandEnvelope envelope_from_json(const json& j, const SchemaRegistry& registry) {
  if (!j.is_object()) throw SchemaViolation("command is not a JSON object");
  auto type_it = j.find("$type");
  if (type_it == j.end() || !type_it->is_string() || type_it->get<std::string>().empty()) {
    throw SchemaViolation("command is missing a non-empty \"$type\"");
  }
  CommandEnvelope env;
  env.type_name = type_it->get<std::string>();
  const CommandSchema* schema = registry.find(env.type_name);
  if (!schema) throw UnknownCommand(env.type_name);

  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() == "$type") continue;
    const FieldSpec* spec = schema->find(it.key());
    if (!spec) throw SchemaViolation(env.type_name + ": unknown field '" + it.key() + "'");
    try {
      env.params.emplace(it.key(), field_from_json(*it, *spec));
    } catch (const SchemaViolation& e) {
      throw SchemaViolation(env.type_name + ": " + e.what());
    }
  }
  for (const auto& f : schema->required) {
    if (!env.params.contains(f.name)) {
      throw SchemaViolation(env.type_name + ": missing required field '" + f.name + "'");
    }
  }
  return env;
}

json envelope_to_json(const CommandEnvelope& envelope) {
  json j = json::object();
  j["$type"] = envelope.type_name;
  for (const auto& [name, value] : envelope.params) j[name] = field_to_json(value);
  return j;
}

Params resolve_params(const CommandEnvelope& envelope, const CommandSchema& schema) {
  Params out = envelope.params;
  for (const auto& f : schema.optional) {
    if (!out.contains(f.name) && f.default_value) out.emplace(f.name, *f.default_value);
  }
  return out;
}

std::string schema_reference_markdown(const SchemaRegistry& registry) {
  std::ostringstream md;
  md << "# Command API\n";
  for (const auto& name : registry.names()) {
    const CommandSchema& s = *registry.find(name);
    md << "\n## " << name << "\n\n";
    if (!s.doc.empty()) md << s.doc << "\n\n";
    json example = json::object();
    example["$type"] = name;
    for (const auto& f : s.required) {
      FieldValue placeholder;
      switch (f.type) {
        case FieldType::boolean: placeholder = false; break;
        case FieldType::integer:
        case FieldType::object_id: placeholder = std::int64_t{0}; break;
        case FieldType::number: placeholder = 0.0; break;
        case FieldType::string: placeholder = std::string{}; break;
        case FieldType::frequency: placeholder = std::string{"once"}; break;
        case FieldType::vector3: placeholder = Vec3::Zero().eval(); break;
        case FieldType::string_list: placeholder = std::vector<std::string>{}; break;
        case FieldType::id_list: placeholder = std::vector<std::int64_t>{}; break;
      }
      example[f.name] = field_to_json(placeholder);
    }
    md << "```json\n" << example.dump() << "\n```\n\n";
    if (s.required.empty() && s.optional.empty()) continue;
    md << "| Parameter | Type | Description | Default |\n| --- | --- | --- | --- |\n";
    for (const auto& f : s.required) {
      md << "| `" << f.name << "` | " << to_string(f.type) << " | " << f.doc << " | |\n";
    }
    for (const auto& f : s.optional) {
      md << "| `" << f.name << "` | " << to_string(f.type) << " | " << f.doc << " | "
         << (f.default_value ? field_to_json(*f.default_value).dump() : std::string{"(none)"}) << " |\n";
    }
  }
  return md.str();
}

}  // namespace hullsim::protocol
