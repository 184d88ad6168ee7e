#include "hullsim/server/server.hpp"

#include "hullsim/protocol/errors.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <fstream>
#include <iostream>

namespace hullsim::server {

using nlohmann::json;

namespace {

void send_all(int fd, const protocol::Bytes& bytes) {
  std::size_t off = 0;
  while (off < bytes.size()) {
    const ssize_t n = ::send(fd, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw SocketError(std::string("send: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

}  // namespace

Server::Server(commands::Session& session, ServerOptions options) : session_(session), options_(std::move(options)) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw SocketError(std::string("socket: ") + std::strerror(errno));
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(options_.port));
  if (::inet_pton(AF_INET, options_.host.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    throw SocketError("bad host address " + options_.host);
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
    const int err = errno;
    ::close(listen_fd_);
    if (err == EADDRINUSE) throw PortInUse("port " + std::to_string(options_.port) + " is in use");
    throw SocketError(std::string("bind: ") + std::strerror(err));
  }
  if (::listen(listen_fd_, 4) < 0) {
    ::close(listen_fd_);
    throw SocketError(std::string("listen: ") + std::strerror(errno));
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

Server::~Server() {
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

void Server::run() {
  std::optional<std::ofstream> log;
  if (options_.transcript) log.emplace(*options_.transcript, std::ios::binary);
  int client = -1;
  protocol::FrameReader reader;
  std::vector<std::uint8_t> buf(1 << 16);

  while (!stop_ && !session_.terminated()) {
    pollfd fds[2] = {{listen_fd_, POLLIN, 0}, {client, POLLIN, 0}};
    const int n = ::poll(fds, client >= 0 ? 2 : 1, 200);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw SocketError(std::string("poll: ") + std::strerror(errno));
    }
    if (fds[0].revents & POLLIN) {
      const int fd = ::accept(listen_fd_, nullptr, nullptr);
      if (fd >= 0) {
        if (client >= 0) {
          // Single-session server: refuse with a protocol error.
          const auto blob = commands::error_blob(std::nullopt, "", "SessionBusy", "another controller is connected");
          try {
            send_all(fd, protocol::encode_response({blob}, session_.world().frame()));
          } catch (const SocketError&) {
          }
          ::close(fd);
        } else {
          client = fd;
          set_nodelay(client);
          reader = protocol::FrameReader();
          if (!options_.quiet) std::cerr << "controller connected\n";
        }
      }
    }
    if (client >= 0 && (fds[1].revents & (POLLIN | POLLHUP | POLLERR))) {
      const ssize_t got = ::recv(client, buf.data(), buf.size(), 0);
      if (got <= 0) {
        if (got < 0 && errno == EINTR) continue;
        ::close(client);
        client = -1;
        if (!options_.quiet) std::cerr << "controller disconnected\n";
        continue;
      }
      reader.feed(std::span(buf.data(), static_cast<std::size_t>(got)));
      while (auto payload = reader.next()) {
        const std::string response = session_.handle_payload(*payload);
        if (log) {
          json line = {{"response", json::parse(response)}};
          try {
            line["request"] = json::parse(*payload);
          } catch (const json::parse_error&) {
            line["request_raw"] = *payload;
          }
          *log << line.dump() << "\n";
          log->flush();
        }
        try {
          send_all(client, protocol::encode_frame(response));
        } catch (const SocketError&) {
          ::close(client);
          client = -1;
          break;
        }
        if (session_.terminated()) break;
      }
    }
  }
  if (client >= 0) ::close(client);
}

// ---- client ----

Client::Client(const std::string& host, int port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw SocketError(std::string("socket: ") + std::strerror(errno));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  ::inet_pton(AF_INET, host.c_str(), &addr.sin_addr);
  if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
    const int err = errno;
    ::close(fd_);
    throw SocketError(std::string("connect: ") + std::strerror(err));
  }
  set_nodelay(fd_);
}

Client::~Client() {
  if (fd_ >= 0) ::close(fd_);
}

void Client::send_payload(const std::string& payload) { send_all(fd_, protocol::encode_frame(payload)); }

std::optional<std::string> Client::receive() {
  std::vector<std::uint8_t> buf(1 << 16);
  while (true) {
    if (auto p = reader_.next()) return p;
    const ssize_t got = ::recv(fd_, buf.data(), buf.size(), 0);
    if (got < 0 && errno == EINTR) continue;
    if (got <= 0) return std::nullopt;
    reader_.feed(std::span(buf.data(), static_cast<std::size_t>(got)));
  }
}

std::string Client::round_trip(const std::string& payload) {
  send_payload(payload);
  auto r = receive();
  if (!r) throw SocketError("server closed the connection");
  return *r;
}

protocol::ResponseList Client::communicate(const json& commands) {
  const json list = commands.is_array() ? commands : json::array({commands});
  return protocol::decode_response_payload(round_trip(list.dump()));
}

// ---- replay ----

ReplayReport replay_lines(commands::Session& session, const std::vector<json>& lines) {
  ReplayReport rep;
  for (const auto& line : lines) {
    std::string payload;
    const json* recorded = nullptr;
    if (line.is_array()) {
      payload = line.dump();
    } else if (line.is_object() && line.contains("request")) {
      payload = line["request"].dump();
      if (line.contains("response")) recorded = &line["response"];
    } else if (line.is_object() && line.contains("request_raw")) {
      payload = line["request_raw"].get<std::string>();
      if (line.contains("response")) recorded = &line["response"];
    } else {
      throw std::invalid_argument("transcript line is neither a command list nor a request record");
    }
    const std::string response = session.handle_payload(payload);
    if (recorded) {
      ++rep.compared;
      if (json::parse(response) != *recorded) {
        ++rep.mismatches;
        if (!rep.first_mismatch) rep.first_mismatch = rep.rounds;
      }
    }
    rep.responses.push_back(response);
    ++rep.rounds;
    if (session.terminated()) break;
  }
  return rep;
}

ReplayReport replay(commands::Session& session, const std::filesystem::path& transcript) {
  std::ifstream in(transcript);
  if (!in) throw std::invalid_argument("cannot read transcript " + transcript.string());
  std::vector<json> lines;
  std::string text;
  while (std::getline(in, text)) {
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    lines.push_back(json::parse(text));
  }
  return replay_lines(session, lines);
}

// ---- bench ----

json BenchReport::to_json() const {
  return {{"bodies", bodies},       {"steps", steps},           {"seconds", seconds}, {"steps_per_second", steps_per_second},
          {"image_frames", image_frames}, {"image_fps", image_fps}};
}

BenchReport run_bench(std::shared_ptr<const ModelLibrary> library, std::shared_ptr<const audio::MaterialTables> tables,
                      int steps, int image_frames) {
  commands::Session s(std::make_shared<World>(std::move(library)), std::move(tables));
  json setup = json::array({{{"$type", "create_empty_room"}, {"width", 12}, {"length", 12}}});
  static const char* names[] = {"block", "toy_cylinder", "ball_rubber", "toy_prism", "iron_box"};
  BenchReport rep;
  rep.bodies = 10;
  for (int i = 0; i < rep.bodies; ++i) {
    const double x = -2.0 + (i % 5), z = i < 5 ? -1.0 : 1.0;
    setup.push_back({{"$type", "add_object"},
                     {"name", names[i % 5]},
                     {"id", i + 1},
                     {"position", {{"x", x}, {"y", 0.3 * (i % 3)}, {"z", z}}}});
  }
  setup.push_back({{"$type", "send_transforms"}, {"frequency", "always"}});
  s.handle_payload(setup.dump());

  const std::string empty = "[]";
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t bytes = 0;
  for (int i = 0; i < steps; ++i) bytes += s.handle_payload(empty).size();
  const auto t1 = std::chrono::steady_clock::now();
  rep.steps = steps;
  rep.seconds = std::chrono::duration<double>(t1 - t0).count();
  rep.steps_per_second = rep.seconds > 0.0 ? steps / rep.seconds : 0.0;

  s.handle_payload(R"([{"$type": "send_transforms", "frequency": "never"},
                       {"$type": "create_avatar", "avatar_id": "a"},
                       {"$type": "teleport_avatar_to", "avatar_id": "a", "position": {"x": 0, "y": 2, "z": -4}},
                       {"$type": "look_at", "avatar_id": "a", "object_id": 3},
                       {"$type": "send_images", "avatar_id": "a", "frequency": "always"}])");
  const auto t2 = std::chrono::steady_clock::now();
  for (int i = 0; i < image_frames; ++i) bytes += s.handle_payload(empty).size();
  const auto t3 = std::chrono::steady_clock::now();
  rep.image_frames = image_frames;
  const double img_s = std::chrono::duration<double>(t3 - t2).count();
  rep.image_fps = img_s > 0.0 ? image_frames / img_s : 0.0;
  (void)bytes;
  return rep;
}

}  // namespace hullsim::server
