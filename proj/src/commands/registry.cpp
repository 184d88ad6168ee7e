#include "hullsim/commands/registry.hpp"

namespace hullsim::commands {

using protocol::CommandSchema;
using protocol::FieldSpec;
using protocol::FieldType;
using protocol::FieldValue;

namespace {

FieldSpec req(std::string name, FieldType type, std::string doc) { return {std::move(name), type, std::nullopt, std::move(doc)}; }

FieldSpec opt(std::string name, FieldType type, std::string doc, std::optional<FieldValue> def = std::nullopt) {
  return {std::move(name), type, std::move(def), std::move(doc)};
}

FieldSpec object_id() { return req("id", FieldType::object_id, "The unique object ID."); }
FieldSpec avatar_id() { return opt("avatar_id", FieldType::string, "The avatar ID.", std::string(kDefaultAvatarId)); }
FieldSpec frequency() {
  return opt("frequency", FieldType::frequency, "How often to send: once, always or never.", std::string("once"));
}
FieldSpec ids() { return opt("ids", FieldType::id_list, "Object IDs to report; every object when absent."); }

}  // namespace

std::vector<CommandSchema> builtin_schemas() {
  using F = FieldType;
  const FieldValue zero = Vec3::Zero().eval();
  std::vector<CommandSchema> v;
  v.push_back({"load_scene", "Clear the world and load an (empty) scene.", {},
               {opt("scene_name", F::string, "Scene name.", std::string("ProcGenScene"))}});
  v.push_back({"create_empty_room", "Build a floor plus four 3 m walls, 0.1 m thick.",
               {req("width", F::number, "Room width along x, meters."), req("length", F::number, "Room length along z, meters.")},
               {}});
  v.push_back({"add_object", "Add a model from the library.",
               {object_id()},
               {opt("name", F::string, "Library record name."),
                opt("model_name", F::string, "Alias of name."),
                opt("url", F::string, "file:// URL of the mesh; defaults to the record's mesh."),
                opt("scale_factor", F::number, "Uniform scale; defaults to the record's scale factor."),
                opt("position", F::vector3, "Model origin (bottom center), meters.", zero),
                opt("rotation", F::vector3, "Euler angles in degrees, applied yaw, pitch, roll.", zero),
                opt("category", F::string, "Semantic category; defaults to the record's wcategory.")}});
  v.push_back({"destroy_object", "Remove an object.", {object_id()}, {}});
  v.push_back({"teleport_object", "Move an object's origin.", {object_id(), req("position", F::vector3, "New origin, meters.")}, {}});
  v.push_back({"rotate_object", "Set an object's rotation.",
               {object_id(), req("rotation", F::vector3, "Euler angles in degrees.")}, {}});
  v.push_back({"apply_force_to_object", "Apply an impulse (N*s) during this frame.",
               {object_id(), req("force", F::vector3, "Impulse, N*s.")},
               {opt("point", F::vector3, "World-space application point; the center of mass when absent.")}});
  v.push_back({"set_mass", "Override an object's mass.", {object_id(), req("mass", F::number, "Mass, kg.")}, {}});
  v.push_back({"set_physic_material", "Override friction and bounciness.",
               {object_id(), req("dynamic_friction", F::number, "Dynamic friction coefficient."),
                req("static_friction", F::number, "Static friction coefficient."),
                req("bounciness", F::number, "Restitution in [0, 1].")},
               {}});
  v.push_back({"set_audio_material", "Override an object's audio material.",
               {object_id(), req("material", F::string, "cardboard, wood, metal, ceramic, glass or plastic.")}, {}});
  v.push_back({"create_avatar", "Add an avatar.", {},
               {opt("type", F::string, "Avatar type.", std::string("A_Img_Caps_Kinematic")), avatar_id(),
                opt("id", F::string, "Alias of avatar_id.")}});
  v.push_back({"teleport_avatar_to", "Move an avatar.", {req("position", F::vector3, "New position, meters.")}, {avatar_id()}});
  v.push_back({"look_at", "Turn an avatar's camera toward an object's bounds center.",
               {req("object_id", F::object_id, "Target object.")}, {avatar_id()}});
  v.push_back({"move_avatar", "Apply an impulse to an embodied avatar.", {req("force", F::vector3, "Impulse, N*s.")}, {avatar_id()}});
  v.push_back({"set_pass_masks", "Choose the image passes an avatar renders.",
               {req("pass_masks", F::string_list, "Subset of _img, _id, _depth.")}, {avatar_id()}});
  v.push_back({"send_images", "Request camera images.", {}, {avatar_id(), frequency()}});
  v.push_back({"send_bounds", "Request world-space bounds.", {}, {ids(), frequency()}});
  v.push_back({"send_transforms", "Request object poses.", {}, {ids(), frequency()}});
  v.push_back({"send_rigidbodies", "Request object velocities and masses.", {}, {ids(), frequency()}});
  v.push_back({"send_collisions", "Request contact events.", {}, {frequency()}});
  v.push_back({"send_grayscale", "Request the fraction of an avatar's view covered by an object.",
               {req("object_id", F::object_id, "Target object.")}, {avatar_id(), frequency()}});
  v.push_back({"send_audio", "Request impact sounds for this frame's collisions.", {},
               {opt("avatar_id", F::string, "Listener; mono clips at the source when absent."), frequency()}});
  v.push_back({"set_gravity", "Set the gravity vector.", {req("vector", F::vector3, "Acceleration, m/s^2.")}, {}});
  v.push_back({"set_random_seed", "Reseed the world random stream.", {req("seed", F::integer, "Seed.")}, {}});
  v.push_back({"terminate", "End the session after this frame.", {}, {}});
  return v;
}

protocol::SchemaRegistry make_builtin_registry() {
  protocol::SchemaRegistry r;
  for (auto& s : builtin_schemas()) r.add(std::move(s));
  return r;
}

const std::vector<std::string>& object_command_names() {
  static const std::vector<std::string> names = {"add_object", "destroy_object", "teleport_object",    "rotate_object",
                                                 "apply_force_to_object", "set_mass", "set_physic_material",
                                                 "set_audio_material"};
  return names;
}

}  // namespace hullsim::commands
