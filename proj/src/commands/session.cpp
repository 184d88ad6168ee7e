#include "hullsim/commands/session.hpp"

#include "hullsim/core/base64.hpp"
#include "hullsim/protocol/errors.hpp"
#include "hullsim/sensors/render.hpp"

#include <cmath>
#include <filesystem>
#include <set>

namespace hullsim::commands {

using nlohmann::json;
using protocol::OutputBlob;
using protocol::Params;
using protocol::SchemaViolation;

const char* to_string(OutputKind k) {
  switch (k) {
    case OutputKind::bounds: return "bounds";
    case OutputKind::images: return "images";
    case OutputKind::transforms: return "transforms";
    case OutputKind::rigidbodies: return "rigidbodies";
    case OutputKind::collisions: return "collisions";
    case OutputKind::grayscale: return "grayscale";
    case OutputKind::audio: return "audio";
  }
  return "?";
}

Frequency frequency_from_string(const std::string& s) {
  if (s == "once") return Frequency::once;
  if (s == "always") return Frequency::always;
  if (s == "never") return Frequency::never;
  throw SchemaViolation("frequency must be once, always or never");
}

RequestKey key_of(const OutputRequest& r) {
  const std::uint64_t obj = r.kind == OutputKind::grayscale ? r.object_id : 0;
  return {r.kind, r.avatar_id.value_or(""), obj};
}

std::string error_name(const std::exception& e) {
  // Most derived first.
  if (dynamic_cast<const protocol::UnknownCommand*>(&e)) return "UnknownCommand";
  if (dynamic_cast<const protocol::SchemaViolation*>(&e)) return "SchemaViolation";
  if (dynamic_cast<const protocol::DuplicateCommand*>(&e)) return "DuplicateCommand";
  if (dynamic_cast<const protocol::OversizePayload*>(&e)) return "OversizePayload";
  if (dynamic_cast<const protocol::MalformedFrame*>(&e)) return "MalformedFrame";
  if (dynamic_cast<const protocol::ProtocolError*>(&e)) return "ProtocolError";
  if (dynamic_cast<const DuplicateId*>(&e)) return "DuplicateId";
  if (dynamic_cast<const UnknownObject*>(&e)) return "UnknownObject";
  if (dynamic_cast<const DuplicateAvatarId*>(&e)) return "DuplicateAvatarId";
  if (dynamic_cast<const UnknownAvatar*>(&e)) return "UnknownAvatar";
  if (dynamic_cast<const DegenerateLookAt*>(&e)) return "DegenerateLookAt";
  if (dynamic_cast<const NotEmbodied*>(&e)) return "NotEmbodied";
  if (dynamic_cast<const WorldError*>(&e)) return "WorldError";
  if (dynamic_cast<const RecordNotFound*>(&e)) return "RecordNotFound";
  if (dynamic_cast<const LibraryNotFound*>(&e)) return "LibraryNotFound";
  if (dynamic_cast<const InvalidRecord*>(&e)) return "InvalidRecord";
  if (dynamic_cast<const UnknownMaterial*>(&e)) return "UnknownMaterial";
  if (dynamic_cast<const sensors::PassNotEnabled*>(&e)) return "PassNotEnabled";
  if (dynamic_cast<const physics::SimulationDiverged*>(&e)) return "SimulationDiverged";
  if (dynamic_cast<const std::invalid_argument*>(&e)) return "InvalidArgument";
  return "Error";
}

OutputBlob error_blob(std::optional<std::size_t> index, const std::string& command, const std::string& error,
                      const std::string& message) {
  json body = {{"index", nullptr}, {"command", command}, {"error", error}, {"message", message}};
  if (index) body["index"] = *index;
  return OutputBlob("erro", std::move(body));
}

// ---- parameter access ----

namespace {

template <class T>
const T& get(const Params& p, const char* name) {
  auto it = p.find(name);
  if (it == p.end()) throw SchemaViolation(std::string("missing field '") + name + "'");
  return std::get<T>(it->second);
}

template <class T>
std::optional<T> maybe(const Params& p, const char* name) {
  auto it = p.find(name);
  if (it == p.end()) return std::nullopt;
  return std::get<T>(it->second);
}

std::uint64_t id_field(const Params& p, const char* name) {
  return static_cast<std::uint64_t>(get<std::int64_t>(p, name));
}

std::optional<std::vector<std::uint64_t>> ids_field(const Params& p) {
  auto v = maybe<std::vector<std::int64_t>>(p, "ids");
  if (!v) return std::nullopt;
  std::vector<std::uint64_t> out(v->begin(), v->end());
  return out;
}

std::string avatar_field(const Params& p) { return get<std::string>(p, "avatar_id"); }

void require_finite(const Vec3& v, const char* what) {
  if (!v.allFinite()) throw SchemaViolation(std::string(what) + " must be finite");
}

void require_ids(const World& w, const std::optional<std::vector<std::uint64_t>>& ids) {
  if (!ids) return;
  for (auto id : *ids) (void)w.object(id);
}

std::string mesh_from_url(const World& w, const ModelRecord& record, const std::string& url) {
  static constexpr std::string_view scheme = "file://";
  if (!url.starts_with(scheme)) throw std::invalid_argument("only file:// urls are supported: " + url);
  const std::filesystem::path path(url.substr(scheme.size()));
  if (std::filesystem::weakly_canonical(path) == std::filesystem::weakly_canonical(w.library().mesh_path(record)))
    return {};
  if (!std::filesystem::is_regular_file(path)) throw std::invalid_argument("mesh not found: " + path.string());
  return path.string();
}

json label_json(const BodyLabel& l) {
  json j = {{"kind", l.kind}};
  if (l.kind == "avatar")
    j["avatar_id"] = l.avatar_id;
  else if (l.kind == "object")
    j["id"] = l.id;
  return j;
}

json quat_json(const Quat& q) { return {{"x", q.x()}, {"y", q.y()}, {"z", q.z()}, {"w", q.w()}}; }

std::vector<std::uint64_t> selected(const World& w, const std::optional<std::vector<std::uint64_t>>& ids) {
  std::vector<std::uint64_t> out;
  if (ids) {
    for (auto id : *ids)
      if (w.find_object(id)) out.push_back(id);
  } else {
    for (const auto& [id, _] : w.objects()) out.push_back(id);
  }
  return out;
}

OutputRequest send_request(OutputKind kind, const Params& p) {
  OutputRequest r;
  r.kind = kind;
  r.frequency = frequency_from_string(get<std::string>(p, "frequency"));
  return r;
}

}  // namespace

json vec_json(const Vec3& v) { return {{"x", v.x()}, {"y", v.y()}, {"z", v.z()}}; }

json bounds_body(const World& world, const std::optional<std::vector<std::uint64_t>>& ids) {
  json objects = json::array();
  for (auto id : selected(world, ids)) objects.push_back(sensors::compute_bounds(world, id).to_json());
  return {{"objects", objects}};
}

json transforms_body(const World& world, const std::optional<std::vector<std::uint64_t>>& ids) {
  json objects = json::array();
  for (auto id : selected(world, ids)) {
    const Pose p = world.object(id).pose();
    objects.push_back({{"id", id},
                       {"position", vec_json(p.position)},
                       {"rotation", quat_json(p.orientation)},
                       {"forward", vec_json(p.rotate(Vec3::UnitZ()))}});
  }
  return {{"objects", objects}};
}

json rigidbodies_body(const World& world, const std::optional<std::vector<std::uint64_t>>& ids) {
  json objects = json::array();
  for (auto id : selected(world, ids)) {
    const auto& b = world.object(id).body;
    objects.push_back({{"id", id},
                       {"velocity", vec_json(b.state.linear_velocity)},
                       {"angular_velocity", vec_json(b.state.angular_velocity)},
                       {"mass", b.state.mass},
                       {"sleeping", b.sleeping}});
  }
  return {{"objects", objects}};
}

json collisions_body(const World& world) {
  json list = json::array();
  for (const auto& e : world.last_events()) {
    list.push_back({{"a", label_json(world.label(e.a))},
                    {"b", label_json(world.label(e.b))},
                    {"state", physics::to_string(e.state)},
                    {"point", vec_json(e.point)},
                    {"normal", vec_json(e.normal)},
                    {"relative_normal_speed", e.relative_normal_speed},
                    {"impulse", e.impulse}});
  }
  return {{"frame", world.frame()}, {"collisions", list}};
}

std::vector<json> audio_bodies(const World& world, const audio::MaterialTables& tables,
                               const std::optional<std::string>& listener) {
  std::vector<json> out;
  const auto& cfg = tables.config();
  const auto& events = world.last_events();
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    if (e.state != physics::ContactState::enter || !(e.relative_normal_speed > cfg.speed_threshold)) continue;
    // The lighter body rings; the heavier one is the striker. Static geometry is infinitely heavy.
    audio::Participant pa{world.material_of(e.a), world.mass_of(e.a)};
    audio::Participant pb{world.material_of(e.b), world.mass_of(e.b)};
    const bool a_struck = pa.mass <= pb.mass;
    Rng rng = audio::event_rng(world.seed(), world.frame(), i);
    const auto clip = audio::synthesize_impact(e, a_struck ? pa : pb, a_struck ? pb : pa, tables, rng);

    json body = {{"frame", world.frame()},
                 {"event_index", i},
                 {"a", label_json(world.label(e.a))},
                 {"b", label_json(world.label(e.b))},
                 {"position", vec_json(clip.source_position)},
                 {"sample_rate", clip.sample_rate},
                 {"gain", clip.gain}};
    std::string wav;
    if (listener) {
      const Avatar& av = world.avatar(*listener);
      std::vector<physics::BodyRef> exclude = {e.a, e.b};
      if (av.body) exclude.push_back(av.body->ref);
      const auto stereo = audio::spatialize(clip, av.pose, world, cfg, exclude);
      body["channels"] = 2;
      body["duration"] = static_cast<double>(stereo.left.size()) / stereo.sample_rate;
      body["listener"] = *listener;
      body["distance"] = stereo.distance;
      body["occluded"] = stereo.occluded;
      wav = audio::encode_wav(stereo);
    } else {
      body["channels"] = 1;
      body["duration"] = clip.duration();
      wav = audio::encode_wav(clip);
    }
    body["format"] = "wav";
    body["data_b64"] = base64_encode(std::span(reinterpret_cast<const std::uint8_t*>(wav.data()), wav.size()));
    out.push_back(std::move(body));
  }
  return out;
}

// ---- session ----

Session::Session(std::shared_ptr<World> world, std::shared_ptr<const audio::MaterialTables> audio)
    : world_(std::move(world)), audio_(std::move(audio)) {
  if (!world_) throw std::invalid_argument("session needs a world");
  if (!audio_) audio_ = std::make_shared<const audio::MaterialTables>(audio::MaterialTables::bundled());
  install_builtins();
}

void Session::register_command(protocol::CommandSchema schema, Handler handler) {
  const std::string name = schema.type_name;
  registry_.add(std::move(schema));
  handlers_[name] = std::move(handler);
}

void Session::request_output(OutputRequest r) {
  const auto key = key_of(r);
  if (r.frequency == Frequency::never)
    requests_.erase(key);
  else
    requests_[key] = std::move(r);
}

void Session::run_envelope(std::size_t index, const protocol::CommandEnvelope& env, Pending& pending) {
  try {
    const auto* schema = registry_.find(env.type_name);
    if (!schema) throw protocol::UnknownCommand(env.type_name);
    handlers_.at(env.type_name)(*this, protocol::resolve_params(env, *schema));
  } catch (const std::exception& e) {
    pending.errors.push_back(error_blob(index, env.type_name, error_name(e), e.what()));
  }
}

void Session::run_one(std::size_t index, const json& element, Pending& pending) {
  protocol::CommandEnvelope env;
  try {
    env = protocol::envelope_from_json(element, registry_);
  } catch (const std::exception& e) {
    std::string name;
    if (element.is_object() && element.contains("$type") && element["$type"].is_string())
      name = element["$type"].get<std::string>();
    pending.errors.push_back(error_blob(index, name, error_name(e), e.what()));
    return;
  }
  run_envelope(index, env, pending);
}

protocol::ResponseList Session::finish(Pending& pending) {
  protocol::ResponseList resp;
  resp.outputs = std::move(pending.errors);
  try {
    world_->step();
  } catch (const std::exception& e) {
    resp.outputs.push_back(error_blob(std::nullopt, "", error_name(e), e.what()));
  }
  for (auto it = requests_.begin(); it != requests_.end();) {
    try {
      collect(it->second, resp.outputs);
    } catch (const std::exception& e) {
      resp.outputs.push_back(error_blob(std::nullopt, std::string("send_") + to_string(it->second.kind), error_name(e),
                                        e.what()));
    }
    if (it->second.frequency == Frequency::once)
      it = requests_.erase(it);
    else
      ++it;
  }
  resp.frame = world_->frame();
  return resp;
}

protocol::ResponseList Session::dispatch(const std::vector<protocol::CommandEnvelope>& commands) {
  Pending pending;
  for (std::size_t i = 0; i < commands.size(); ++i) run_envelope(i, commands[i], pending);
  return finish(pending);
}

protocol::ResponseList Session::dispatch_json(const json& list) {
  Pending pending;
  if (!list.is_array()) {
    pending.errors.push_back(error_blob(std::nullopt, "", "MalformedFrame", "a command list must be a JSON array"));
  } else {
    for (std::size_t i = 0; i < list.size(); ++i) run_one(i, list[i], pending);
  }
  return finish(pending);
}

std::string Session::handle_payload(std::string_view payload) {
  json list;
  try {
    list = json::parse(payload);
  } catch (const json::parse_error& e) {
    Pending pending;
    pending.errors.push_back(error_blob(std::nullopt, "", "MalformedFrame", e.what()));
    const auto resp = finish(pending);
    return protocol::encode_response_payload(resp.outputs, resp.frame);
  }
  const auto resp = dispatch_json(list);
  return protocol::encode_response_payload(resp.outputs, resp.frame);
}

void Session::collect(const OutputRequest& r, std::vector<OutputBlob>& out) const {
  const World& w = *world_;
  switch (r.kind) {
    case OutputKind::bounds: out.emplace_back("boun", bounds_body(w, r.ids)); break;
    case OutputKind::transforms: out.emplace_back("tran", transforms_body(w, r.ids)); break;
    case OutputKind::rigidbodies: out.emplace_back("rigi", rigidbodies_body(w, r.ids)); break;
    case OutputKind::collisions: out.emplace_back("coll", collisions_body(w)); break;
    case OutputKind::images:
      for (auto& body : sensors::image_blobs(w, w.avatar(*r.avatar_id))) out.emplace_back("imag", std::move(body));
      break;
    case OutputKind::grayscale: {
      const double v = sensors::grayscale(w, w.avatar(*r.avatar_id), r.object_id);
      out.emplace_back("gray", json{{"avatar_id", *r.avatar_id}, {"object_id", r.object_id}, {"value", v}});
      break;
    }
    case OutputKind::audio:
      for (auto& body : audio_bodies(w, *audio_, r.avatar_id)) out.emplace_back("audi", std::move(body));
      break;
  }
}

// ---- built-in handlers ----

void Session::install_builtins() {
  std::map<std::string, Handler> h;
  h["load_scene"] = [](Session& s, const Params& p) {
    s.world().load_scene(get<std::string>(p, "scene_name"));
    s.requests_.clear();
  };
  h["create_empty_room"] = [](Session& s, const Params& p) {
    const double w = get<double>(p, "width"), l = get<double>(p, "length");
    if (!(w > 0.0 && l > 0.0 && std::isfinite(w) && std::isfinite(l)))
      throw std::invalid_argument("room dimensions must be positive");
    s.world().create_empty_room(w, l);
  };
  h["add_object"] = [](Session& s, const Params& p) {
    auto name = maybe<std::string>(p, "name");
    const auto alias = maybe<std::string>(p, "model_name");
    if (name && alias && *name != *alias) throw SchemaViolation("name and model_name disagree");
    if (!name) name = alias;
    if (!name) throw SchemaViolation("add_object needs name or model_name");
    World& w = s.world();
    const ModelRecord& record = w.library().get(*name);
    const auto id = id_field(p, "id");
    if (w.find_object(id)) throw DuplicateId("object id " + std::to_string(id) + " already exists");
    const auto url = maybe<std::string>(p, "url");
    const std::string mesh = url ? mesh_from_url(w, record, *url) : std::string{};
    const double scale = maybe<double>(p, "scale_factor").value_or(record.scale_factor);
    if (!(scale > 0.0 && std::isfinite(scale))) throw std::invalid_argument("scale_factor must be positive");
    const Vec3 pos = get<Vec3>(p, "position"), rot = get<Vec3>(p, "rotation");
    require_finite(pos, "position");
    require_finite(rot, "rotation");
    auto& obj = w.add_object(record, pos, rot, scale, id, mesh);
    if (auto cat = maybe<std::string>(p, "category")) obj.category = *cat;
  };
  h["destroy_object"] = [](Session& s, const Params& p) { s.world().destroy_object(id_field(p, "id")); };
  h["teleport_object"] = [](Session& s, const Params& p) {
    const Vec3 pos = get<Vec3>(p, "position");
    require_finite(pos, "position");
    s.world().teleport_object(id_field(p, "id"), pos);
  };
  h["rotate_object"] = [](Session& s, const Params& p) {
    const Vec3 rot = get<Vec3>(p, "rotation");
    require_finite(rot, "rotation");
    s.world().rotate_object(id_field(p, "id"), rot);
  };
  h["apply_force_to_object"] = [](Session& s, const Params& p) {
    const Vec3 f = get<Vec3>(p, "force");
    require_finite(f, "force");
    const auto point = maybe<Vec3>(p, "point");
    if (point) require_finite(*point, "point");
    s.world().apply_force(id_field(p, "id"), f, point);
  };
  h["set_mass"] = [](Session& s, const Params& p) {
    const double m = get<double>(p, "mass");
    if (!(m > 0.0 && std::isfinite(m))) throw std::invalid_argument("mass must be positive");
    s.world().set_mass(id_field(p, "id"), m);
  };
  h["set_physic_material"] = [](Session& s, const Params& p) {
    s.world().set_physic_material(id_field(p, "id"), get<double>(p, "dynamic_friction"),
                                  get<double>(p, "static_friction"), get<double>(p, "bounciness"));
  };
  h["set_audio_material"] = [](Session& s, const Params& p) {
    const auto m = audio_material_from_string(get<std::string>(p, "material"));
    s.world().set_audio_material(id_field(p, "id"), m);
  };
  h["create_avatar"] = [](Session& s, const Params& p) {
    std::string id = get<std::string>(p, "avatar_id");
    if (auto alias = maybe<std::string>(p, "id")) {
      // avatar_id always resolves to its default, so only an explicit mismatch is an error.
      if (p.contains("id") && id != kDefaultAvatarId && id != *alias) throw SchemaViolation("id and avatar_id disagree");
      id = *alias;
    }
    s.world().create_avatar(avatar_kind_from_string(get<std::string>(p, "type")), id);
  };
  h["teleport_avatar_to"] = [](Session& s, const Params& p) {
    const Vec3 pos = get<Vec3>(p, "position");
    require_finite(pos, "position");
    s.world().teleport_avatar(avatar_field(p), pos);
  };
  h["look_at"] = [](Session& s, const Params& p) {
    s.world().look_at_object(avatar_field(p), id_field(p, "object_id"));
  };
  h["move_avatar"] = [](Session& s, const Params& p) {
    const Vec3 f = get<Vec3>(p, "force");
    require_finite(f, "force");
    s.world().move_avatar(avatar_field(p), f);
  };
  h["set_pass_masks"] = [](Session& s, const Params& p) {
    s.world().set_pass_masks(avatar_field(p), get<std::vector<std::string>>(p, "pass_masks"));
  };
  h["send_images"] = [](Session& s, const Params& p) {
    auto r = send_request(OutputKind::images, p);
    r.avatar_id = avatar_field(p);
    (void)s.world().avatar(*r.avatar_id);
    s.request_output(std::move(r));
  };
  for (auto [name, kind] : {std::pair{"send_bounds", OutputKind::bounds}, std::pair{"send_transforms", OutputKind::transforms},
                            std::pair{"send_rigidbodies", OutputKind::rigidbodies}}) {
    h[name] = [kind](Session& s, const Params& p) {
      auto r = send_request(kind, p);
      r.ids = ids_field(p);
      require_ids(s.world(), r.ids);
      s.request_output(std::move(r));
    };
  }
  h["send_collisions"] = [](Session& s, const Params& p) { s.request_output(send_request(OutputKind::collisions, p)); };
  h["send_grayscale"] = [](Session& s, const Params& p) {
    auto r = send_request(OutputKind::grayscale, p);
    r.avatar_id = avatar_field(p);
    r.object_id = id_field(p, "object_id");
    (void)s.world().avatar(*r.avatar_id);
    (void)s.world().object(r.object_id);
    s.request_output(std::move(r));
  };
  h["send_audio"] = [](Session& s, const Params& p) {
    auto r = send_request(OutputKind::audio, p);
    r.avatar_id = maybe<std::string>(p, "avatar_id");
    if (r.avatar_id) (void)s.world().avatar(*r.avatar_id);
    s.request_output(std::move(r));
  };
  h["set_gravity"] = [](Session& s, const Params& p) {
    const Vec3 g = get<Vec3>(p, "vector");
    require_finite(g, "vector");
    s.world().set_gravity(g);
  };
  h["set_random_seed"] = [](Session& s, const Params& p) {
    s.world().set_seed(static_cast<std::uint64_t>(get<std::int64_t>(p, "seed")));
  };
  h["terminate"] = [](Session& s, const Params&) { s.request_terminate(); };

  for (auto& schema : builtin_schemas()) {
    auto it = h.find(schema.type_name);
    if (it == h.end()) throw std::logic_error("no handler for " + schema.type_name);
    register_command(std::move(schema), std::move(it->second));
  }
}

}  // namespace hullsim::commands
