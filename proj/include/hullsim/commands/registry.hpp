#pragma once

#include "hullsim/protocol/schema.hpp"

#include <string>
#include <vector>

namespace hullsim::commands {

// Schemas of every built-in command.
std::vector<protocol::CommandSchema> builtin_schemas();
protocol::SchemaRegistry make_builtin_registry();

// Commands that act on one scene object through an `id` field.
const std::vector<std::string>& object_command_names();

inline constexpr const char* kDefaultAvatarId = "a";

}  // namespace hullsim::commands
