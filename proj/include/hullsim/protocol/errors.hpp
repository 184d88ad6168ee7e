#pragma once

#include <stdexcept>
#include <string>

namespace hullsim::protocol {

struct ProtocolError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OversizePayload : ProtocolError {
  using ProtocolError::ProtocolError;
};

struct MalformedFrame : ProtocolError {
  using ProtocolError::ProtocolError;
};

struct UnknownCommand : ProtocolError {
  explicit UnknownCommand(std::string name)
      : ProtocolError("unknown command: " + name), command(std::move(name)) {}
  std::string command;
};

struct SchemaViolation : ProtocolError {
  using ProtocolError::ProtocolError;
};

struct DuplicateCommand : ProtocolError {
  explicit DuplicateCommand(const std::string& name)
      : ProtocolError("command already registered: " + name) {}
};

}  // namespace hullsim::protocol
