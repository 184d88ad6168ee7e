#pragma once

#include "hullsim/audio/impact.hpp"
#include "hullsim/commands/registry.hpp"
#include "hullsim/protocol/codec.hpp"
#include "hullsim/world/world.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace hullsim::commands {

enum class OutputKind { bounds, images, transforms, rigidbodies, collisions, grayscale, audio };
enum class Frequency { once, always, never };

const char* to_string(OutputKind k);
Frequency frequency_from_string(const std::string& s);

struct OutputRequest {
  OutputKind kind = OutputKind::bounds;
  Frequency frequency = Frequency::once;
  std::optional<std::string> avatar_id;
  std::optional<std::vector<std::uint64_t>> ids;
  std::uint64_t object_id = 0;  // grayscale target
};

// A new request with the same key replaces the old one.
using RequestKey = std::tuple<OutputKind, std::string, std::uint64_t>;
RequestKey key_of(const OutputRequest& r);

// Exception class name as reported in "erro" blobs.
std::string error_name(const std::exception& e);

class Session;
using Handler = std::function<void(Session&, const protocol::Params&)>;

// Applies command lists to one world in lock-step: every list runs in order,
// then the world steps exactly once and pending output requests are served.
class Session {
 public:
  Session(std::shared_ptr<World> world, std::shared_ptr<const audio::MaterialTables> audio);

  // Throws DuplicateCommand.
  void register_command(protocol::CommandSchema schema, Handler handler);
  const protocol::SchemaRegistry& registry() const { return registry_; }

  // One round trip. Failing commands produce an "erro" blob
  // {index, command, error, message}; the rest of the list still runs.
  protocol::ResponseList dispatch(const std::vector<protocol::CommandEnvelope>& commands);
  protocol::ResponseList dispatch_json(const nlohmann::json& list);
  // Raw request payload in, response payload out. A payload that is not a
  // JSON array still steps the world and reports MalformedFrame.
  std::string handle_payload(std::string_view payload);

  World& world() { return *world_; }
  const World& world() const { return *world_; }
  const audio::MaterialTables& audio_tables() const { return *audio_; }
  const std::map<RequestKey, OutputRequest>& requests() const { return requests_; }
  bool terminated() const { return terminated_; }

  // Handler helpers.
  void request_output(OutputRequest r);
  void request_terminate() { terminated_ = true; }

 private:
  struct Pending {
    std::vector<protocol::OutputBlob> errors;
  };
  void run_one(std::size_t index, const nlohmann::json& element, Pending& pending);
  void run_envelope(std::size_t index, const protocol::CommandEnvelope& env, Pending& pending);
  protocol::ResponseList finish(Pending& pending);
  void collect(const OutputRequest& r, std::vector<protocol::OutputBlob>& out) const;
  void install_builtins();

  std::shared_ptr<World> world_;
  std::shared_ptr<const audio::MaterialTables> audio_;
  protocol::SchemaRegistry registry_;
  std::map<std::string, Handler> handlers_;
  std::map<RequestKey, OutputRequest> requests_;
  bool terminated_ = false;
};

protocol::OutputBlob error_blob(std::optional<std::size_t> index, const std::string& command, const std::string& error,
                                const std::string& message);

// Blob bodies, exposed for tests and offline drivers.
nlohmann::json vec_json(const Vec3& v);
nlohmann::json bounds_body(const World& world, const std::optional<std::vector<std::uint64_t>>& ids);
nlohmann::json transforms_body(const World& world, const std::optional<std::vector<std::uint64_t>>& ids);
nlohmann::json rigidbodies_body(const World& world, const std::optional<std::vector<std::uint64_t>>& ids);
nlohmann::json collisions_body(const World& world);
// One body per enter event above the speed threshold in the last step.
std::vector<nlohmann::json> audio_bodies(const World& world, const audio::MaterialTables& tables,
                                         const std::optional<std::string>& listener);

}  // namespace hullsim::commands
