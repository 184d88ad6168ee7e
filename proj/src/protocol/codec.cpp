#include "hullsim/protocol/codec.hpp"

#include "hullsim/protocol/errors.hpp"

#include <algorithm>

namespace hullsim::protocol {

using nlohmann::json;

bool is_registered_tag(std::string_view tag) {
  return std::find(kOutputTags.begin(), kOutputTags.end(), tag) != kOutputTags.end();
}

OutputBlob::OutputBlob(std::string tag, json body_) : type_id(std::move(tag)), body(std::move(body_)) {
  if (!is_registered_tag(type_id)) throw ProtocolError("unregistered output tag '" + type_id + "'");
  if (!body.is_object()) throw ProtocolError("output blob body must be an object");
  body.erase("$type_id");
}

namespace {

json parse_json(std::string_view payload) {
  try {
    return json::parse(payload.begin(), payload.end());
  } catch (const json::parse_error& e) {
    throw MalformedFrame(std::string("payload is not valid JSON: ") + e.what());
  }
}

}  // namespace

std::vector<CommandEnvelope> decode_command_payload(std::string_view payload, const SchemaRegistry& registry) {
  const json doc = parse_json(payload);
  if (!doc.is_array()) throw MalformedFrame("command payload must be a JSON array");
  std::vector<CommandEnvelope> out;
  out.reserve(doc.size());
  for (const auto& item : doc) out.push_back(envelope_from_json(item, registry));
  return out;
}

std::vector<CommandEnvelope> decode_command_list(std::span<const std::uint8_t> framed,
                                                 const SchemaRegistry& registry) {
  return decode_command_payload(decode_frame(framed), registry);
}

std::string encode_command_payload(const std::vector<CommandEnvelope>& commands) {
  json doc = json::array();
  for (const auto& c : commands) doc.push_back(envelope_to_json(c));
  return doc.dump();
}

Bytes encode_command_list(const std::vector<CommandEnvelope>& commands) {
  return encode_frame(encode_command_payload(commands));
}

json response_to_json(const std::vector<OutputBlob>& outputs, std::uint64_t frame) {
  json doc = json::array();
  for (const auto& blob : outputs) {
    json item = blob.body;
    item["$type_id"] = blob.type_id;
    doc.push_back(std::move(item));
  }
  doc.push_back(frame);
  return doc;
}

std::string encode_response_payload(const std::vector<OutputBlob>& outputs, std::uint64_t frame) {
  return response_to_json(outputs, frame).dump();
}

Bytes encode_response(const std::vector<OutputBlob>& outputs, std::uint64_t frame) {
  return encode_frame(encode_response_payload(outputs, frame));
}

ResponseList decode_response_payload(std::string_view payload) {
  const json doc = parse_json(payload);
  if (!doc.is_array() || doc.empty()) throw MalformedFrame("response must be a non-empty JSON array");
  if (!doc.back().is_number_unsigned() && !(doc.back().is_number_integer() && doc.back().get<std::int64_t>() >= 0)) {
    throw MalformedFrame("response must end with an unsigned frame counter");
  }
  ResponseList out;
  out.frame = doc.back().get<std::uint64_t>();
  for (std::size_t i = 0; i + 1 < doc.size(); ++i) {
    const json& item = doc[i];
    if (!item.is_object() || !item.contains("$type_id") || !item["$type_id"].is_string()) {
      throw MalformedFrame("response element " + std::to_string(i) + " lacks a \"$type_id\"");
    }
    out.outputs.emplace_back(item["$type_id"].get<std::string>(), item);
  }
  return out;
}

ResponseList decode_response(std::span<const std::uint8_t> framed) {
  return decode_response_payload(decode_frame(framed));
}

}  // namespace hullsim::protocol
