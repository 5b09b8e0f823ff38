#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "vstubmw/wire.hpp"

namespace vstubmw {

struct HostPort {
  std::string host = "127.0.0.1";
  uint16_t port = 0;

  static HostPort parse(const std::string& text);  // "host:port"
  std::string str() const { return host + ":" + std::to_string(port); }
  bool operator==(const HostPort&) const = default;
};

// Blocking connected TCP socket, move-only owner of the fd.
class Socket final : public ByteReader {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& other) noexcept;
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket();

  // throws kTransportFailure on refusal/timeout
  static Socket connect_to(const HostPort& addr, int timeout_ms = 5000);

  size_t read_some(uint8_t* dst, size_t max) override;
  void write_all(const uint8_t* src, size_t n);
  void set_io_timeout(int timeout_ms);
  void shutdown_both();
  void close();
  bool valid() const { return fd_ >= 0; }
  int fd() const { return fd_; }

 private:
  int fd_ = -1;
};

class Listener {
 public:
  Listener() = default;
  Listener(Listener&&) noexcept;
  Listener& operator=(Listener&&) noexcept;
  Listener(const Listener&) = delete;
  ~Listener();

  // port 0 binds an ephemeral port; the chosen one is reported by port().
  // throws kPortInUse / kTransportFailure
  static Listener bind_to(const HostPort& addr);

  // Blocks for the next connection; throws kTransportFailure once closed.
  Socket accept();
  // Makes a blocked accept() return without touching the descriptor, so it
  // stays valid for a concurrently blocked accept thread. close() may only
  // run once no other thread can still be inside accept().
  void request_stop();
  void close();
  uint16_t port() const { return port_; }
  const HostPort& addr() const { return addr_; }

 private:
  int fd_ = -1;
  uint16_t port_ = 0;
  HostPort addr_;
};

// Client end of the framed request/response protocol. One request in flight
// at a time; request ids are assigned locally and echoed by the server.
class FramedConn {
 public:
  explicit FramedConn(Socket socket)
      : socket_(std::move(socket)), reader_(socket_) {}

  Envelope call(MsgType type, Json body);

 private:
  Socket socket_;
  FrameReader reader_;
  uint64_t next_request_id_ = 1;
};

// Accept loop feeding a fixed pool of connection workers, each running a
// strict decode -> handle -> reply cycle per connection. A framing error
// abandons the connection. Connections are expected to be short-lived
// (one call or a few); the pool bounds concurrency, not correctness.
class FramedServer {
 public:
  using Handler = std::function<Envelope(const Envelope&)>;

  FramedServer() = default;
  ~FramedServer();
  FramedServer(const FramedServer&) = delete;

  void start(const HostPort& listen, Handler handler, int workers = 8);
  void stop();  // idempotent
  bool running() const { return running_.load(); }
  uint16_t port() const { return listener_.port(); }
  HostPort addr() const { return {listener_.addr().host, listener_.port()}; }

 private:
  void accept_loop();
  void worker_loop();
  void serve_connection(Socket socket);

  Listener listener_;
  Handler handler_;
  std::thread accept_thread_;
  std::vector<std::thread> workers_;
  std::atomic<bool> running_{false};

  std::mutex mu_;
  std::condition_variable queue_cv_;
  std::deque<Socket> pending_;
  std::vector<int> live_fds_;
};

}  // namespace vstubmw
