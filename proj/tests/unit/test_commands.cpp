#include "hullsim/commands/session.hpp"
#include "hullsim/core/base64.hpp"
#include "hullsim/protocol/errors.hpp"
#include "hullsim/sensors/render.hpp"
#include "../support/golden.hpp"

#include <doctest.h>

#include <set>

using namespace hullsim;
using namespace hullsim::commands;
using nlohmann::json;
using protocol::ResponseList;

namespace {

std::shared_ptr<const ModelLibrary> lib() {
  static const auto l = std::make_shared<const ModelLibrary>(ModelLibrary::bundled());
  return l;
}

std::shared_ptr<const audio::MaterialTables> tables() {
  static const auto t = std::make_shared<const audio::MaterialTables>(audio::MaterialTables::bundled());
  return t;
}

Session fresh(std::uint64_t seed = 0) {
  WorldConfig cfg;
  cfg.seed = seed;
  return Session(std::make_shared<World>(lib(), cfg), tables());
}

json v3(double x, double y, double z) { return {{"x", x}, {"y", y}, {"z", z}}; }

std::vector<const protocol::OutputBlob*> tagged(const ResponseList& r, const std::string& tag) {
  std::vector<const protocol::OutputBlob*> out;
  for (const auto& b : r.outputs)
    if (b.type_id == tag) out.push_back(&b);
  return out;
}

std::string decode(const json& blob) {
  const auto bytes = base64_decode(blob["data_b64"].get<std::string>());
  return std::string(bytes.begin(), bytes.end());
}

// Transcript with error blobs removed, for isolation checks.
std::vector<std::string> without_errors(const std::vector<ResponseList>& rs) {
  std::vector<std::string> out;
  for (const auto& r : rs) {
    std::vector<protocol::OutputBlob> kept;
    for (const auto& b : r.outputs)
      if (b.type_id != "erro") kept.push_back(b);
    out.push_back(protocol::encode_response_payload(kept, r.frame));
  }
  return out;
}

}  // namespace

TEST_CASE("built-in registry covers the command vocabulary") {
  const auto reg = make_builtin_registry();
  const std::vector<std::string> listed = {
      "load_scene",       "create_empty_room", "add_object",        "destroy_object",   "teleport_object",
      "rotate_object",    "apply_force_to_object", "set_mass",      "set_physic_material", "set_audio_material",
      "create_avatar",    "teleport_avatar_to", "look_at",          "move_avatar",      "set_pass_masks",
      "send_images",      "send_bounds",       "send_transforms",   "send_rigidbodies", "send_collisions",
      "send_grayscale",   "set_gravity",       "set_random_seed",   "terminate"};
  CHECK(reg.size() >= 16);
  for (const auto& n : listed) CHECK_MESSAGE(reg.contains(n), n);
  for (const auto& n : object_command_names()) {
    const auto* s = reg.find(n);
    REQUIRE(s);
    const auto* f = s->find("id");
    REQUIRE(f);
    CHECK(f->type == protocol::FieldType::object_id);
    CHECK(f->doc == "The unique object ID.");
  }
  const std::string md = protocol::schema_reference_markdown(reg);
  for (const auto& n : reg.names()) CHECK(md.find(n) != std::string::npos);
}

TEST_CASE("register_command extends the session") {
  auto s = fresh();
  std::int64_t seen = 0;
  s.register_command({"example_command", "This integer will be output to the console.",
                      {{"integer", protocol::FieldType::integer, std::nullopt, ""}}, {}},
                     [&](Session&, const protocol::Params& p) { seen = std::get<std::int64_t>(p.at("integer")); });
  const auto r = s.dispatch_json(json::parse(R"([{"$type": "example_command", "integer": 15}])"));
  CHECK(seen == 15);
  CHECK(r.outputs.empty());
  CHECK_THROWS_AS(s.register_command({"example_command", "", {}, {}}, [](Session&, const protocol::Params&) {}),
                  protocol::DuplicateCommand);
  CHECK_THROWS_AS(s.register_command({"add_object", "", {}, {}}, [](Session&, const protocol::Params&) {}),
                  protocol::DuplicateCommand);
}

TEST_CASE("load_scene on a fresh world answers with the frame only") {
  auto s = fresh();
  const auto r = s.dispatch_json(json::parse(R"([{"$type": "load_scene", "scene_name": "ProcGenScene"}])"));
  CHECK(r.outputs.empty());
  CHECK(r.frame == 1);
  CHECK(s.world().objects().empty());
  CHECK(s.world().scene_name() == "ProcGenScene");
  CHECK(s.handle_payload(R"([{"$type": "load_scene", "scene_name": "ProcGenScene"}])") == "[2]");
}

TEST_CASE("room, table and one bounds blob") {
  auto s = fresh();
  const json list = {{{"$type", "create_empty_room"}, {"width", 12}, {"length", 12}},
                     {{"$type", "add_object"}, {"name", "small_table_green_marble"}, {"id", 0}},
                     {{"$type", "send_bounds"}, {"frequency", "once"}, {"ids", {0}}}};
  const auto r = s.dispatch_json(list);
  REQUIRE(r.outputs.size() == 1);
  CHECK(r.outputs[0].type_id == "boun");
  const auto& objs = r.outputs[0].body["objects"];
  REQUIRE(objs.size() == 1);
  CHECK(objs[0]["id"] == 0);
  CHECK(objs[0]["top"]["y"].get<double>() == doctest::Approx(0.8).epsilon(0.01));
  CHECK(s.world().environment().size() == 5);
  // "once" is spent.
  CHECK(s.dispatch({}).outputs.empty());
}

TEST_CASE("every round trip advances exactly one frame") {
  auto s = fresh();
  for (std::size_t n : {0u, 1u, 10u, 50u}) {
    const auto before = s.world().frame();
    std::vector<protocol::CommandEnvelope> list(n, protocol::CommandEnvelope{"set_gravity", {{"vector", Vec3(0, -9.81, 0)}}});
    const auto r = s.dispatch(list);
    CHECK(r.frame == before + 1);
    CHECK(s.world().frame() == before + 1);
  }
  const auto r = s.dispatch_json(json::array());
  CHECK(r.outputs.empty());
  CHECK(r.frame == 5);
}

TEST_CASE("commands run in list order") {
  auto s = fresh();
  const json list = {{{"$type", "set_gravity"}, {"vector", v3(0, 0, 0)}},
                     {{"$type", "add_object"}, {"name", "unit_cube"}, {"id", 3}},
                     {{"$type", "teleport_object"}, {"id", 3}, {"position", v3(1, 2, 3)}},
                     {{"$type", "teleport_object"}, {"id", 3}, {"position", v3(-4, 5, 6)}},
                     {{"$type", "send_transforms"}, {"frequency", "once"}}};
  const auto r = s.dispatch_json(list);
  const auto t = tagged(r, "tran");
  REQUIRE(t.size() == 1);
  CHECK(t[0]->body["objects"][0]["position"] == v3(-4, 5, 6));

  // Destroy then re-add with the same id is fine; the reverse order is not.
  auto r2 = s.dispatch_json({{{"$type", "destroy_object"}, {"id", 3}}, {{"$type", "add_object"}, {"name", "unit_cube"}, {"id", 3}}});
  CHECK(tagged(r2, "erro").empty());
  r2 = s.dispatch_json({{{"$type", "add_object"}, {"name", "unit_cube"}, {"id", 3}}, {{"$type", "destroy_object"}, {"id", 3}}});
  const auto e = tagged(r2, "erro");
  REQUIRE(e.size() == 1);
  CHECK(e[0]->body["index"] == 0);
  CHECK(e[0]->body["error"] == "DuplicateId");
  CHECK(s.world().objects().empty());
}

TEST_CASE("error blobs name the index and reason") {
  auto s = fresh();
  const json list = {{{"$type", "load_scene"}},
                     {{"$type", "no_such_command"}},
                     {{"$type", "teleport_object"}, {"id", 99}, {"position", v3(0, 0, 0)}},
                     {{"$type", "add_object"}, {"name", "unit_cube"}, {"id", 1}, {"colour", "red"}},
                     {{"$type", "add_object"}, {"name", "unit_cube"}, {"id", 1}},
                     42,
                     {{"$type", "set_audio_material"}, {"id", 1}, {"material", "rubber"}},
                     {{"$type", "add_object"}, {"id", 2}},
                     {{"$type", "add_object"}, {"name", "unit_cube"}, {"id", 3}, {"url", "https://example.com/cube.obj"}},
                     {{"$type", "look_at"}, {"avatar_id", "ghost"}, {"object_id", 1}}};
  const auto r = s.dispatch_json(list);
  const auto e = tagged(r, "erro");
  struct Want {
    int index;
    const char* command;
    const char* error;
  };
  const std::vector<Want> want = {{1, "no_such_command", "UnknownCommand"}, {2, "teleport_object", "UnknownObject"},
                                  {3, "add_object", "SchemaViolation"},     {5, "", "SchemaViolation"},
                                  {6, "set_audio_material", "UnknownMaterial"}, {7, "add_object", "SchemaViolation"},
                                  {8, "add_object", "InvalidArgument"},     {9, "look_at", "UnknownAvatar"}};
  REQUIRE(e.size() == want.size());
  for (std::size_t i = 0; i < want.size(); ++i) {
    CHECK(e[i]->body["index"] == want[i].index);
    CHECK(e[i]->body["command"] == want[i].command);
    CHECK(e[i]->body["error"] == want[i].error);
    CHECK(!e[i]->body["message"].get<std::string>().empty());
  }
  CHECK(s.world().objects().size() == 1);
  CHECK(s.world().object(1).audio_material == AudioMaterial::wood);
}

TEST_CASE("a failing command leaves the world as if it were skipped") {
  const json base = {{{"$type", "create_empty_room"}, {"width", 6}, {"length", 6}},
                     {{"$type", "add_object"}, {"name", "block"}, {"id", 1}, {"position", v3(0, 0.5, 0)}},
                     {{"$type", "add_object"}, {"name", "ball_rubber"}, {"id", 2}, {"position", v3(0.5, 1, 0)}},
                     {{"$type", "apply_force_to_object"}, {"id", 2}, {"force", v3(-0.3, 0, 0)}},
                     {{"$type", "create_avatar"}, {"avatar_id", "cam"}},
                     {{"$type", "teleport_avatar_to"}, {"avatar_id", "cam"}, {"position", v3(0, 1.5, -3)}},
                     {{"$type", "send_transforms"}, {"frequency", "always"}},
                     {{"$type", "send_rigidbodies"}, {"frequency", "always"}},
                     {{"$type", "send_collisions"}, {"frequency", "always"}}};
  const std::vector<json> bad = {
      {{"$type", "add_object"}, {"name", "block"}, {"id", 1}, {"position", v3(3, 3, 3)}},
      {{"$type", "set_mass"}, {"id", 1}, {"mass", -2.0}},
      {{"$type", "set_mass"}, {"id", 77}, {"mass", 2.0}},
      {{"$type", "set_physic_material"}, {"id", 2}, {"dynamic_friction", 0.1}, {"static_friction", 0.1}, {"bounciness", 3.0}},
      {{"$type", "teleport_object"}, {"id", 2}, {"position", v3(0, 0, 0)}, {"extra", 1}},
      {{"$type", "rotate_object"}, {"id", 2}},
      {{"$type", "create_avatar"}, {"avatar_id", "cam"}},
      {{"$type", "move_avatar"}, {"avatar_id", "cam"}, {"force", v3(1, 0, 0)}},
      {{"$type", "set_pass_masks"}, {"avatar_id", "cam"}, {"pass_masks", {"_normals"}}},
      {{"$type", "send_grayscale"}, {"avatar_id", "cam"}, {"object_id", 55}},
      {{"$type", "send_bounds"}, {"ids", {1, 55}}},
      {{"$type", "apply_force_to_object"}, {"id", 55}, {"force", v3(1, 0, 0)}},
  };
  auto run = [&](const std::optional<json>& insert, std::size_t at) {
    auto s = fresh(5);
    json first = base;
    if (insert) first.insert(first.begin() + static_cast<long>(at), *insert);
    std::vector<ResponseList> rs;
    rs.push_back(s.dispatch_json(first));
    for (int i = 0; i < 60; ++i) rs.push_back(s.dispatch({}));
    return std::pair{without_errors(rs), tagged(rs[0], "erro").size()};
  };
  const auto [clean, clean_errors] = run(std::nullopt, 0);
  CHECK(clean_errors == 0);
  for (std::size_t k = 0; k < bad.size(); ++k) {
    for (std::size_t at : {std::size_t{4}, base.size()}) {
      const auto [dirty, errors] = run(bad[k], at);
      CHECK_MESSAGE(errors == 1, bad[k].dump());
      CHECK_MESSAGE(dirty == clean, bad[k].dump());
    }
  }
}

TEST_CASE("output frequencies") {
  auto s = fresh();
  s.dispatch_json({{{"$type", "add_object"}, {"name", "unit_cube"}, {"id", 1}},
                   {{"$type", "send_transforms"}, {"frequency", "always"}},
                   {{"$type", "send_bounds"}, {"frequency", "once"}}});
  auto r = s.dispatch({});
  CHECK(tagged(r, "tran").size() == 1);
  CHECK(tagged(r, "boun").empty());
  // A second always request with ids replaces the first.
  r = s.dispatch_json({{{"$type", "add_object"}, {"name", "unit_cube"}, {"id", 2}, {"position", v3(3, 0, 0)}},
                       {{"$type", "send_transforms"}, {"frequency", "always"}, {"ids", {2}}}});
  REQUIRE(tagged(r, "tran").size() == 1);
  CHECK(tagged(r, "tran")[0]->body["objects"].size() == 1);
  r = s.dispatch_json({{{"$type", "send_transforms"}, {"frequency", "never"}}});
  CHECK(tagged(r, "tran").empty());
  CHECK(s.requests().empty());
  // Requests for one avatar do not replace requests for another.
  s.dispatch_json({{{"$type", "create_avatar"}, {"avatar_id", "a"}},
                   {{"$type", "create_avatar"}, {"avatar_id", "b"}},
                   {{"$type", "send_grayscale"}, {"avatar_id", "a"}, {"object_id", 1}, {"frequency", "always"}},
                   {{"$type", "send_grayscale"}, {"avatar_id", "b"}, {"object_id", 1}, {"frequency", "always"}},
                   {{"$type", "send_grayscale"}, {"avatar_id", "b"}, {"object_id", 2}, {"frequency", "always"}}});
  CHECK(s.requests().size() == 3);
  r = s.dispatch({});
  CHECK(tagged(r, "gray").size() == 3);
}

TEST_CASE("malformed payloads still step") {
  auto s = fresh();
  auto resp = protocol::decode_response_payload(s.handle_payload("{not json"));
  CHECK(resp.frame == 1);
  REQUIRE(resp.outputs.size() == 1);
  CHECK(resp.outputs[0].type_id == "erro");
  CHECK(resp.outputs[0].body["error"] == "MalformedFrame");
  CHECK(resp.outputs[0].body["index"].is_null());
  resp = protocol::decode_response_payload(s.handle_payload(R"({"$type": "load_scene"})"));
  CHECK(resp.frame == 2);
  CHECK(resp.outputs.at(0).body["error"] == "MalformedFrame");
}

TEST_CASE("avatar creation accepts both id spellings") {
  auto s = fresh();
  auto r = s.dispatch_json({{{"$type", "create_avatar"}, {"type", "A_Img_Caps_Kinematic"}, {"id", "x"}},
                            {{"$type", "create_avatar"}},
                            {{"$type", "create_avatar"}, {"type", "A_Simple_Body"}, {"avatar_id", "ball"}},
                            {{"$type", "create_avatar"}, {"type", "A_Hovercraft"}, {"avatar_id", "h"}},
                            {{"$type", "create_avatar"}, {"avatar_id", "p"}, {"id", "q"}}});
  CHECK(s.world().avatars().contains("x"));
  CHECK(s.world().avatars().contains("a"));
  CHECK(s.world().avatar("ball").kind == AvatarKind::sphere_embodied);
  const auto e = tagged(r, "erro");
  REQUIRE(e.size() == 2);
  CHECK(e[0]->body["index"] == 3);
  CHECK(e[1]->body["index"] == 4);
  CHECK(s.world().avatars().size() == 3);
}

TEST_CASE("add_object urls") {
  auto s = fresh();
  const auto& cube = lib()->get("unit_cube");
  const auto& block = lib()->get("block");
  auto r = s.dispatch_json({{{"$type", "add_object"}, {"name", "unit_cube"}, {"id", 1}, {"url", lib()->url(cube)}},
                            {{"$type", "add_object"}, {"name", "unit_cube"}, {"id", 2}, {"url", lib()->url(block)}, {"position", v3(3, 0, 0)}},
                            {{"$type", "add_object"}, {"name", "unit_cube"}, {"id", 3}, {"url", "file:///no/such/mesh.obj"}},
                            {{"$type", "add_object"}, {"model_name", "unit_cube"}, {"name", "block"}, {"id", 4}},
                            {{"$type", "add_object"}, {"name", "block"}, {"id", 5}, {"category", "brick"},
                             {"scale_factor", 2.0}, {"position", v3(-3, 0, 0)}}});
  const auto e = tagged(r, "erro");
  REQUIRE(e.size() == 2);
  CHECK(e[0]->body["index"] == 2);
  CHECK(e[1]->body["index"] == 3);
  // The url decides the mesh; the record supplies physics.
  const auto b1 = sensors::compute_bounds(s.world(), 1), b2 = sensors::compute_bounds(s.world(), 2);
  CHECK(b1.top.y() - b1.bottom.y() == doctest::Approx(1.0));
  CHECK(b2.top.y() - b2.bottom.y() == doctest::Approx(0.1));
  CHECK(s.world().object(2).density == cube.density);
  CHECK(s.world().object(5).category == "brick");
  CHECK(s.world().object(1).category == "cube");
  const auto b5 = sensors::compute_bounds(s.world(), 5);
  CHECK(b5.top.y() - b5.bottom.y() == doctest::Approx(0.2));
}

TEST_CASE("terminate is honoured after the step") {
  auto s = fresh();
  const auto r = s.dispatch_json({{{"$type", "terminate"}}});
  CHECK(s.terminated());
  CHECK(r.frame == 1);
}

TEST_CASE("first example session renders the box") {
  auto s = fresh(42);
  const auto run = golden::first_session(s);
  REQUIRE(run.responses.size() == 3);
  for (const auto& r : run.responses) CHECK(tagged(r, "erro").empty());
  CHECK(run.table_top == doctest::Approx(0.8).epsilon(0.01));
  CHECK(run.responses[1].outputs.empty());
  const auto img = tagged(run.responses[2], "imag");
  REQUIRE(img.size() == 1);
  CHECK(img[0]->body["pass"] == "_img");
  CHECK(img[0]->body["avatar_id"] == "a");
  const std::string ppm = decode(img[0]->body);
  const std::string header = "P6\n256 256\n255\n";
  REQUIRE(ppm.size() == header.size() + 256 * 256 * 3);
  CHECK(ppm.compare(0, header.size(), header) == 0);
  // look_at centres the box.
  const Rgb box = s.world().object(1).segmentation_color;
  const std::size_t center = header.size() + (128 * 256 + 128) * 3;
  CHECK(static_cast<std::uint8_t>(ppm[center]) == box[0]);
  CHECK(static_cast<std::uint8_t>(ppm[center + 1]) == box[1]);
  CHECK(static_cast<std::uint8_t>(ppm[center + 2]) == box[2]);
}

TEST_CASE("second example session") {
  auto s = fresh(42);
  const auto run = golden::second_session(s);
  for (const auto& r : run.responses) CHECK(tagged(r, "erro").empty());
  CHECK(run.table_top == doctest::Approx(0.8).epsilon(0.01));
  CHECK(tagged(run.responses[2], "boun").size() == 1);
  CHECK(tagged(run.responses.back(), "imag").size() == 1);
  CHECK(s.world().object(7301).category == "table");
  const auto settled = golden::settle(s, 7301, 7302, 500);
  CHECK(settled.penetration <= 0.002);
  CHECK(std::abs(settled.box_bottom - settled.table_top) <= 0.005);
}

TEST_CASE("audio blobs for impacts") {
  auto run = [](std::optional<std::string> listener) {
    auto s = fresh(9);
    json list = {{{"$type", "create_empty_room"}, {"width", 6}, {"length", 6}},
                 {{"$type", "add_object"}, {"name", "ball_steel"}, {"id", 1}, {"position", v3(0, 0.3, 0)}},
                 {{"$type", "create_avatar"}, {"avatar_id", "ear"}},
                 {{"$type", "teleport_avatar_to"}, {"avatar_id", "ear"}, {"position", v3(2, 1, 0)}}};
    json req = {{"$type", "send_audio"}, {"frequency", "always"}};
    if (listener) req["avatar_id"] = *listener;
    list.push_back(req);
    std::vector<json> blobs;
    auto r = s.dispatch_json(list);
    for (int i = 0; i < 100; ++i) {
      for (const auto* b : tagged(r, "audi")) blobs.push_back(b->body);
      r = s.dispatch({});
    }
    return blobs;
  };
  const auto mono = run(std::nullopt);
  REQUIRE(!mono.empty());
  CHECK(mono == run(std::nullopt));
  const auto& m0 = mono.front();
  CHECK(m0["channels"] == 1);
  CHECK(m0["a"]["kind"] == "object");
  CHECK(m0["b"]["kind"] == "environment");
  const std::string wav = decode(m0);
  CHECK(wav.compare(0, 4, "RIFF") == 0);
  CHECK(wav.compare(8, 4, "WAVE") == 0);
  const auto stereo = run("ear");
  REQUIRE(stereo.size() == mono.size());
  CHECK(stereo.front()["channels"] == 2);
  CHECK(stereo.front()["distance"].get<double>() == doctest::Approx(std::sqrt(4.0 + 1.0)).epsilon(0.05));
  CHECK(stereo.front()["occluded"] == false);
}

TEST_CASE("collision and rigidbody blobs") {
  auto s = fresh();
  s.dispatch_json({{{"$type", "create_empty_room"}, {"width", 6}, {"length", 6}},
                   {{"$type", "add_object"}, {"name", "block"}, {"id", 4}, {"position", v3(0, 0.2, 0)}},
                   {{"$type", "send_collisions"}, {"frequency", "always"}},
                   {{"$type", "send_rigidbodies"}, {"frequency", "always"}}});
  std::set<std::string> states;
  for (int i = 0; i < 40; ++i) {
    const auto r = s.dispatch({});
    const auto c = tagged(r, "coll");
    REQUIRE(c.size() == 1);
    CHECK(c[0]->body["frame"] == r.frame);
    for (const auto& e : c[0]->body["collisions"]) states.insert(e["state"].get<std::string>());
    const auto rb = tagged(r, "rigi");
    REQUIRE(rb.size() == 1);
    CHECK(rb[0]->body["objects"][0]["mass"].get<double>() == doctest::Approx(600.0 * 0.2 * 0.2 * 0.1));
  }
  CHECK(states.contains("enter"));
  CHECK(states.contains("stay"));
}
