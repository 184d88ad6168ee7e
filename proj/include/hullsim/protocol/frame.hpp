#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hullsim::protocol {

using Bytes = std::vector<std::uint8_t>;

inline constexpr std::size_t kFrameHeaderSize = 4;

// Throws OversizePayload when `size` does not fit the 32-bit length prefix.
void check_payload_size(std::uint64_t size);

// frame := u32 little-endian byte count ++ payload
Bytes encode_frame(std::span<const std::uint8_t> payload);
Bytes encode_frame(std::string_view payload);

// Decodes exactly one frame; trailing or missing bytes are MalformedFrame.
std::string decode_frame(std::span<const std::uint8_t> framed);

// Incremental reassembly for stream transports.
class FrameReader {
 public:
  void feed(std::span<const std::uint8_t> bytes);
  // Next complete payload, if one has fully arrived.
  std::optional<std::string> next();
  std::size_t buffered() const { return buffer_.size(); }

 private:
  Bytes buffer_;
};

}  // namespace hullsim::protocol
