#pragma once

#include "hullsim/protocol/frame.hpp"
#include "hullsim/protocol/schema.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace hullsim::protocol {

// Registered 4-character output data tags.
inline constexpr std::array<std::string_view, 8> kOutputTags = {
    "boun", "imag", "coll", "tran", "rigi", "gray", "audi", "erro"};

bool is_registered_tag(std::string_view tag);

// A tagged output-data record. `body` never carries the "$type_id" key itself.
struct OutputBlob {
  std::string type_id;
  nlohmann::json body = nlohmann::json::object();

  // Throws ProtocolError for an unregistered tag.
  OutputBlob(std::string tag, nlohmann::json body_ = nlohmann::json::object());

  bool operator==(const OutputBlob&) const = default;
};

struct ResponseList {
  std::vector<OutputBlob> outputs;
  std::uint64_t frame = 0;

  bool operator==(const ResponseList&) const = default;
};

// Request side: a JSON array of command objects inside one frame.
std::vector<CommandEnvelope> decode_command_payload(std::string_view payload, const SchemaRegistry& registry);
std::vector<CommandEnvelope> decode_command_list(std::span<const std::uint8_t> framed,
                                                 const SchemaRegistry& registry);
std::string encode_command_payload(const std::vector<CommandEnvelope>& commands);
Bytes encode_command_list(const std::vector<CommandEnvelope>& commands);

// Response side: [blob, blob, ..., frame].
nlohmann::json response_to_json(const std::vector<OutputBlob>& outputs, std::uint64_t frame);
std::string encode_response_payload(const std::vector<OutputBlob>& outputs, std::uint64_t frame);
Bytes encode_response(const std::vector<OutputBlob>& outputs, std::uint64_t frame);
ResponseList decode_response_payload(std::string_view payload);
ResponseList decode_response(std::span<const std::uint8_t> framed);

}  // namespace hullsim::protocol
