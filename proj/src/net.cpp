#include "vstubmw/net.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <utility>

namespace vstubmw {

namespace {

std::string errno_text() { return std::strerror(errno); }

sockaddr_in make_addr(const HostPort& hp) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(hp.port);
  if (::inet_pton(AF_INET, hp.host.c_str(), &addr.sin_addr) != 1) {
    raise(ErrorCode::kTransportFailure, "bad address: " + hp.host);
  }
  return addr;
}

}  // namespace

HostPort HostPort::parse(const std::string& text) {
  auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
    raise(ErrorCode::kInvalidArgument, "expected host:port, got '" + text + "'");
  }
  HostPort hp;
  hp.host = text.substr(0, colon);
  unsigned long port = 0;
  try {
    port = std::stoul(text.substr(colon + 1));
  } catch (const std::exception&) {
    raise(ErrorCode::kInvalidArgument, "bad port in '" + text + "'");
  }
  if (port > 65535) {
    raise(ErrorCode::kInvalidArgument, "port out of range in '" + text + "'");
  }
  hp.port = static_cast<uint16_t>(port);
  return hp;
}

Socket::Socket(Socket&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}

Socket& Socket::operator=(Socket&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = std::exchange(other.fd_, -1);
  }
  return *this;
}

Socket::~Socket() { close(); }

void Socket::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

void Socket::shutdown_both() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

Socket Socket::connect_to(const HostPort& addr, int timeout_ms) {
  int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd < 0) {
    raise(ErrorCode::kTransportFailure, "socket: " + errno_text());
  }
  Socket socket(fd);
  sockaddr_in sa = make_addr(addr);

  int flags = ::fcntl(fd, F_GETFL, 0);
  ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
  int rc = ::connect(fd, reinterpret_cast<sockaddr*>(&sa), sizeof(sa));
  if (rc < 0 && errno != EINPROGRESS) {
    raise(ErrorCode::kTransportFailure,
          "connect " + addr.str() + ": " + errno_text());
  }
  if (rc < 0) {
    pollfd pfd{fd, POLLOUT, 0};
    int ready = ::poll(&pfd, 1, timeout_ms);
    if (ready <= 0) {
      raise(ErrorCode::kTransportFailure, "connect " + addr.str() + ": timeout");
    }
    int err = 0;
    socklen_t len = sizeof(err);
    ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
    if (err != 0) {
      raise(ErrorCode::kTransportFailure,
            "connect " + addr.str() + ": " + std::strerror(err));
    }
  }
  ::fcntl(fd, F_SETFL, flags);

  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  socket.set_io_timeout(timeout_ms);
  return socket;
}

void Socket::set_io_timeout(int timeout_ms) {
  timeval tv{};
  tv.tv_sec = timeout_ms / 1000;
  tv.tv_usec = (timeout_ms % 1000) * 1000;
  ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
  ::setsockopt(fd_, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
}

size_t Socket::read_some(uint8_t* dst, size_t max) {
  while (true) {
    ssize_t n = ::recv(fd_, dst, max, 0);
    if (n > 0) return static_cast<size_t>(n);
    if (n == 0) return 0;
    if (errno == EINTR) continue;
    if (errno == EAGAIN || errno == EWOULDBLOCK) {
      raise(ErrorCode::kTransportFailure, "read timeout");
    }
    raise(ErrorCode::kTransportFailure, "read: " + errno_text());
  }
}

void Socket::write_all(const uint8_t* src, size_t n) {
  size_t sent = 0;
  while (sent < n) {
    ssize_t rc = ::send(fd_, src + sent, n - sent, MSG_NOSIGNAL);
    if (rc < 0) {
      if (errno == EINTR) continue;
      raise(ErrorCode::kTransportFailure, "write: " + errno_text());
    }
    sent += static_cast<size_t>(rc);
  }
}

Listener::Listener(Listener&& other) noexcept
    : fd_(std::exchange(other.fd_, -1)),
      port_(other.port_),
      addr_(other.addr_) {}

Listener& Listener::operator=(Listener&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = std::exchange(other.fd_, -1);
    port_ = other.port_;
    addr_ = other.addr_;
  }
  return *this;
}

Listener::~Listener() { close(); }

void Listener::request_stop() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

void Listener::close() {
  if (fd_ >= 0) {
    ::shutdown(fd_, SHUT_RDWR);
    ::close(fd_);
    fd_ = -1;
  }
}

Listener Listener::bind_to(const HostPort& addr) {
  int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd < 0) {
    raise(ErrorCode::kTransportFailure, "socket: " + errno_text());
  }
  Listener listener;
  listener.fd_ = fd;
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in sa = make_addr(addr);
  if (::bind(fd, reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) < 0) {
    ErrorCode code = errno == EADDRINUSE ? ErrorCode::kPortInUse
                                         : ErrorCode::kTransportFailure;
    raise(code, "bind " + addr.str() + ": " + errno_text());
  }
  if (::listen(fd, 64) < 0) {
    raise(ErrorCode::kTransportFailure, "listen: " + errno_text());
  }
  sockaddr_in bound{};
  socklen_t len = sizeof(bound);
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&bound), &len);
  listener.port_ = ntohs(bound.sin_port);
  listener.addr_ = addr;
  return listener;
}

Socket Listener::accept() {
  while (true) {
    int fd = ::accept4(fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (fd >= 0) {
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      return Socket(fd);
    }
    if (errno == EINTR) continue;
    raise(ErrorCode::kTransportFailure, "accept: " + errno_text());
  }
}

Envelope FramedConn::call(MsgType type, Json body) {
  Envelope request{type, next_request_id_++, std::move(body)};
  auto frame = encode_frame(request);
  socket_.write_all(frame.data(), frame.size());
  Envelope reply = reader_.next();
  if (reply.request_id != request.request_id) {
    raise(ErrorCode::kMalformedPayload,
          "response correlation mismatch: sent " +
              std::to_string(request.request_id) + ", got " +
              std::to_string(reply.request_id));
  }
  return reply;
}

FramedServer::~FramedServer() { stop(); }

void FramedServer::start(const HostPort& listen, Handler handler, int workers) {
  listener_ = Listener::bind_to(listen);
  handler_ = std::move(handler);
  running_.store(true);
  accept_thread_ = std::thread([this] { accept_loop(); });
  workers_.reserve(workers);
  for (int i = 0; i < workers; ++i) {
    workers_.emplace_back([this] { worker_loop(); });
  }
}

void FramedServer::stop() {
  bool was_running = running_.exchange(false);
  if (!was_running && !accept_thread_.joinable()) return;
  listener_.request_stop();  // unblocks accept(); the fd stays valid
  {
    std::lock_guard<std::mutex> lock(mu_);
    for (int fd : live_fds_) ::shutdown(fd, SHUT_RDWR);
    pending_.clear();
  }
  queue_cv_.notify_all();
  if (accept_thread_.joinable()) accept_thread_.join();
  for (auto& worker : workers_) {
    if (worker.joinable()) worker.join();
  }
  workers_.clear();
  listener_.close();  // no thread can reach the descriptor anymore
}

void FramedServer::accept_loop() {
  while (running_.load()) {
    Socket socket;
    try {
      socket = listener_.accept();
    } catch (const Error&) {
      break;  // listener closed
    }
    {
      std::lock_guard<std::mutex> lock(mu_);
      if (!running_.load()) break;
      pending_.push_back(std::move(socket));
    }
    queue_cv_.notify_one();
  }
}

void FramedServer::worker_loop() {
  while (true) {
    Socket socket;
    {
      std::unique_lock<std::mutex> lock(mu_);
      queue_cv_.wait(lock, [this] { return !pending_.empty() || !running_.load(); });
      if (!running_.load()) return;
      socket = std::move(pending_.front());
      pending_.pop_front();
      live_fds_.push_back(socket.fd());
    }
    serve_connection(std::move(socket));
  }
}

void FramedServer::serve_connection(Socket socket) {
  int fd = socket.fd();
  socket.set_io_timeout(0);  // block until peer closes or server shuts down
  FrameReader reader(socket);
  while (running_.load()) {
    Envelope request;
    try {
      request = reader.next();
    } catch (const Error&) {
      break;  // peer gone or stream corrupt; connection is abandoned
    }
    Envelope reply;
    try {
      reply = handler_(request);
    } catch (const Error& e) {
      reply.msg_type = MsgType::kErr;
      reply.body = Json{{"code", error_code_name(e.code())}, {"message", e.what()}};
    } catch (const std::exception& e) {
      reply.msg_type = MsgType::kErr;
      reply.body = Json{{"code", "Internal"}, {"message", e.what()}};
    }
    reply.request_id = request.request_id;
    try {
      auto frame = encode_frame(reply);
      socket.write_all(frame.data(), frame.size());
    } catch (const Error&) {
      break;
    }
  }
  std::lock_guard<std::mutex> lock(mu_);
  live_fds_.erase(std::remove(live_fds_.begin(), live_fds_.end(), fd),
                  live_fds_.end());
}

}  // namespace vstubmw
