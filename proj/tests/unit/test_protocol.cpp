#include "hullsim/protocol/codec.hpp"
#include "hullsim/protocol/errors.hpp"

#include <doctest.h>

#include <random>

using namespace hullsim;
using namespace hullsim::protocol;
using nlohmann::json;

namespace {

SchemaRegistry example_registry() {
  SchemaRegistry reg;
  reg.add({"example_command", "This integer will be output to the console.",
           {{"integer", FieldType::integer, std::nullopt, "The integer."}}, {}});
  return reg;
}

}  // namespace

TEST_CASE("frame encoding") {
  CHECK(encode_frame(std::string_view{}) == Bytes{0, 0, 0, 0});
  const Bytes hello = encode_frame(std::string_view{"hello"});
  CHECK(hello == Bytes{5, 0, 0, 0, 'h', 'e', 'l', 'l', 'o'});
  CHECK(decode_frame(hello) == "hello");
  CHECK_THROWS_AS(check_payload_size(std::uint64_t{1} << 32), OversizePayload);
  CHECK_NOTHROW(check_payload_size((std::uint64_t{1} << 32) - 1));
}

TEST_CASE("frame decoding rejects length mismatches") {
  CHECK_THROWS_AS(decode_frame(Bytes{1, 0}), MalformedFrame);
  CHECK_THROWS_AS(decode_frame(Bytes{3, 0, 0, 0, 'a'}), MalformedFrame);
  CHECK_THROWS_AS(decode_frame(Bytes{1, 0, 0, 0, 'a', 'b'}), MalformedFrame);
}

TEST_CASE("random payloads round-trip through frames") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> byte(0, 255);
  FrameReader reader;
  for (int i = 0; i < 1000; ++i) {
    std::string payload(1024, '\0');
    for (auto& c : payload) c = static_cast<char>(byte(rng));
    const Bytes framed = encode_frame(payload);
    CHECK(framed.size() == payload.size() + 4);
    CHECK(decode_frame(framed) == payload);
    // Feed the stream reader in two uneven chunks.
    const std::size_t cut = static_cast<std::size_t>(byte(rng)) + 1;
    reader.feed(std::span(framed).first(cut));
    CHECK_FALSE(reader.next().has_value());
    reader.feed(std::span(framed).subspan(cut));
    auto out = reader.next();
    REQUIRE(out.has_value());
    CHECK(*out == payload);
  }
  CHECK(reader.buffered() == 0);
}

TEST_CASE("decode the example command") {
  const auto reg = example_registry();
  const auto list = decode_command_list(encode_frame(std::string_view{R"([{"$type": "example_command", "integer": 15}])"}), reg);
  REQUIRE(list.size() == 1);
  CHECK(list[0].type_name == "example_command");
  CHECK(std::get<std::int64_t>(list[0].params.at("integer")) == 15);
  CHECK(decode_command_list(encode_frame(std::string_view{"[]"}), reg).empty());
}

TEST_CASE("decode errors") {
  const auto reg = example_registry();
  try {
    decode_command_payload(R"([{"$type":"no_such_cmd"}])", reg);
    FAIL("expected UnknownCommand");
  } catch (const UnknownCommand& e) {
    CHECK(e.command == "no_such_cmd");
    CHECK(std::string(e.what()).find("no_such_cmd") != std::string::npos);
  }
  CHECK_THROWS_AS(decode_command_payload(R"([{"$type":"example_command"}])", reg), SchemaViolation);
  CHECK_THROWS_AS(decode_command_payload(R"([{"$type":"example_command","integer":1.5}])", reg), SchemaViolation);
  CHECK_THROWS_AS(decode_command_payload(R"([{"$type":"example_command","integer":1,"extra":2}])", reg),
                  SchemaViolation);
  CHECK_THROWS_AS(decode_command_payload(R"([{"integer":1}])", reg), SchemaViolation);
  CHECK_THROWS_AS(decode_command_payload(R"([{"$type":""}])", reg), SchemaViolation);
  CHECK_THROWS_AS(decode_command_payload(R"({"$type":"example_command"})", reg), MalformedFrame);
  CHECK_THROWS_AS(decode_command_payload(R"([{"$type":)", reg), MalformedFrame);
}

TEST_CASE("duplicate registration") {
  auto reg = example_registry();
  CHECK_THROWS_AS(reg.add({"example_command", "", {}, {}}), DuplicateCommand);
  CHECK_THROWS_AS(reg.add({"twice", "", {{"a", FieldType::number, std::nullopt, ""}, {"a", FieldType::number, std::nullopt, ""}}, {}}),
                  SchemaViolation);
}

TEST_CASE("response layout") {
  const json empty = json::parse(encode_response_payload({}, 1));
  CHECK(empty == json::array({1}));

  const OutputBlob bounds("boun", {{"objects", json::array()}});
  const auto payload = encode_response_payload({bounds}, 7);
  const json doc = json::parse(payload);
  REQUIRE(doc.size() == 2);
  CHECK(doc[0]["$type_id"] == "boun");
  CHECK(doc[1] == 7);

  const ResponseList decoded = decode_response(encode_response({bounds}, 7));
  CHECK(decoded.frame == 7);
  REQUIRE(decoded.outputs.size() == 1);
  CHECK(decoded.outputs[0] == bounds);
  CHECK_THROWS_AS(OutputBlob("nope"), ProtocolError);
  CHECK_THROWS_AS(decode_response_payload("[]"), MalformedFrame);
  CHECK_THROWS_AS(decode_response_payload(R"([{"$type_id":"boun"}, "x"])"), MalformedFrame);
}

TEST_CASE("randomized blob sets round-trip and encode canonically") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(kOutputTags.size()) - 1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<OutputBlob> blobs;
    const int count = trial % 6;
    for (int i = 0; i < count; ++i) {
      json body = {{"value", u(rng)}, {"ids", json::array({trial, i})}, {"name", "blob" + std::to_string(i)}};
      blobs.emplace_back(std::string(kOutputTags[pick(rng)]), body);
    }
    const std::uint64_t frame = static_cast<std::uint64_t>(trial) + 1;
    const Bytes first = encode_response(blobs, frame);
    const ResponseList back = decode_response(first);
    CHECK(back.frame == frame);
    CHECK(back.outputs == blobs);
    CHECK(encode_response(back.outputs, back.frame) == first);
  }
}

TEST_CASE("schema defaults are resolved at dispatch, not at decode") {
  SchemaRegistry reg;
  reg.add({"send_bounds", "", {}, {{"frequency", FieldType::frequency, FieldValue{std::string("once")}, ""}}});
  const auto list = decode_command_payload(R"([{"$type":"send_bounds"}])", reg);
  REQUIRE(list.size() == 1);
  CHECK(list[0].params.empty());
  const Params p = resolve_params(list[0], *reg.find("send_bounds"));
  CHECK(std::get<std::string>(p.at("frequency")) == "once");
  CHECK_THROWS_AS(decode_command_payload(R"([{"$type":"send_bounds","frequency":"sometimes"}])", reg),
                  SchemaViolation);
}

TEST_CASE("vector fields need exactly x, y, z") {
  SchemaRegistry reg;
  reg.add({"teleport", "", {{"position", FieldType::vector3, std::nullopt, ""}}, {}});
  const auto ok = decode_command_payload(R"([{"$type":"teleport","position":{"x":1,"y":2.5,"z":-3}}])", reg);
  CHECK(std::get<Vec3>(ok[0].params.at("position")) == Vec3(1, 2.5, -3));
  CHECK_THROWS_AS(decode_command_payload(R"([{"$type":"teleport","position":{"x":1,"y":2}}])", reg), SchemaViolation);
  CHECK_THROWS_AS(decode_command_payload(R"([{"$type":"teleport","position":{"x":1,"y":2,"z":"3"}}])", reg),
                  SchemaViolation);
  CHECK_THROWS_AS(decode_command_payload(R"([{"$type":"teleport","position":[1,2,3]}])", reg), SchemaViolation);
}

TEST_CASE("schema reference lists every command") {
  const auto md = schema_reference_markdown(example_registry());
  CHECK(md.find("## example_command") != std::string::npos);
  CHECK(md.find("`integer`") != std::string::npos);
}
