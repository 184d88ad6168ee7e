#include "hullsim/protocol/frame.hpp"

#include "hullsim/protocol/errors.hpp"

namespace hullsim::protocol {
namespace {

std::uint32_t read_u32le(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

void check_payload_size(std::uint64_t size) {
  if (size >= (std::uint64_t{1} << 32)) {
    throw OversizePayload("payload of " + std::to_string(size) + " bytes exceeds 32-bit frame length");
  }
}

Bytes encode_frame(std::span<const std::uint8_t> payload) {
  check_payload_size(payload.size());
  const auto n = static_cast<std::uint32_t>(payload.size());
  Bytes out;
  out.reserve(kFrameHeaderSize + payload.size());
  for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<std::uint8_t>((n >> shift) & 0xFF));
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

Bytes encode_frame(std::string_view payload) {
  return encode_frame(std::span(reinterpret_cast<const std::uint8_t*>(payload.data()), payload.size()));
}

std::string decode_frame(std::span<const std::uint8_t> framed) {
  if (framed.size() < kFrameHeaderSize) throw MalformedFrame("frame shorter than its length prefix");
  const std::uint32_t n = read_u32le(framed.data());
  if (framed.size() - kFrameHeaderSize != n) {
    throw MalformedFrame("frame length " + std::to_string(n) + " does not match " +
                         std::to_string(framed.size() - kFrameHeaderSize) + " payload bytes");
  }
  return std::string(reinterpret_cast<const char*>(framed.data() + kFrameHeaderSize), n);
}

void FrameReader::feed(std::span<const std::uint8_t> bytes) {
  buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
}

std::optional<std::string> FrameReader::next() {
  if (buffer_.size() < kFrameHeaderSize) return std::nullopt;
  const std::uint32_t n = read_u32le(buffer_.data());
  if (buffer_.size() - kFrameHeaderSize < n) return std::nullopt;
  std::string payload(reinterpret_cast<const char*>(buffer_.data() + kFrameHeaderSize), n);
  buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(kFrameHeaderSize + n));
  return payload;
}

}  // namespace hullsim::protocol
