#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "hguide/session.hpp"

namespace hguide {

struct ServerOptions {
  std::string address = "127.0.0.1";
  unsigned short port = 8765;     // 0 picks a free port
  std::filesystem::path static_dir;  // empty: no static files
  double poll_interval = 0.05;    // s, how often open trials are checked for timeout
  bool handle_signals = false;    // SIGINT/SIGTERM call stop()
};

// HTTP and WebSocket on one port. Any upgrade request becomes a participant
// session; GET /healthz answers "ok"; other GETs are served from static_dir.
// Everything runs on the thread that calls run(), so each session sees its
// messages strictly in arrival order.
class Server {
 public:
  // Binds and listens immediately; throws std::runtime_error (a
  // boost::system::system_error) when the port cannot be bound.
  Server(SessionService& service, ServerOptions opts);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  unsigned short port() const;
  // Blocks until stop().
  void run();
  // Safe from any thread or signal handler context of the io loop.
  // Open trials are finalized as interrupted before run() returns.
  void stop();

  struct Impl;  // defined in server.cpp

 private:
  std::unique_ptr<Impl> impl_;
};

}  // namespace hguide
