#pragma once

#include "hullsim/commands/session.hpp"

#include <json.hpp>

#include <atomic>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

namespace hullsim::server {

struct PortInUse : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SocketError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 1071;  // 0 picks a free port
  std::optional<std::filesystem::path> transcript;  // JSON lines {"request", "response"}
  bool quiet = false;
};

// Single-controller TCP server. A second client receives one framed error
// response and is closed. Returns from run() after `terminate` or stop().
class Server {
 public:
  Server(commands::Session& session, ServerOptions options);  // binds; throws PortInUse
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  int port() const { return port_; }
  void run();
  void stop() { stop_ = true; }  // safe from signal handlers and other threads

 private:
  commands::Session& session_;
  ServerOptions options_;
  int listen_fd_ = -1;
  int port_ = 0;
  std::atomic<bool> stop_{false};
};

// Minimal blocking client for tests and tools.
class Client {
 public:
  Client(const std::string& host, int port);  // throws SocketError
  ~Client();
  Client(const Client&) = delete;
  Client& operator=(const Client&) = delete;

  // Sends one command list; returns the decoded response.
  protocol::ResponseList communicate(const nlohmann::json& commands);
  std::string round_trip(const std::string& payload);
  // Raw framed response, or nullopt when the server has closed the connection.
  std::optional<std::string> receive();
  void send_payload(const std::string& payload);

 private:
  int fd_ = -1;
  protocol::FrameReader reader_;
};

struct ReplayReport {
  std::size_t rounds = 0;
  std::size_t compared = 0;
  std::size_t mismatches = 0;
  std::optional<std::size_t> first_mismatch;
  std::vector<std::string> responses;  // response payloads in order
};

// Transcript lines are either a bare request array or {"request": [...],
// "response": [...]}; recorded responses are compared with the replayed ones.
ReplayReport replay(commands::Session& session, const std::filesystem::path& transcript);
ReplayReport replay_lines(commands::Session& session, const std::vector<nlohmann::json>& lines);

struct BenchReport {
  int bodies = 0;
  int steps = 0;
  double seconds = 0.0;
  double steps_per_second = 0.0;
  int image_frames = 0;
  double image_fps = 0.0;  // 256x256 id pass per round trip
  nlohmann::json to_json() const;
};

// In-process round trips through the full encode/dispatch/step/encode path:
// a 10-body scene with transforms requested every frame, then image frames.
BenchReport run_bench(std::shared_ptr<const ModelLibrary> library, std::shared_ptr<const audio::MaterialTables> tables,
                      int steps = 2000, int image_frames = 50);

}  // namespace hullsim::server
