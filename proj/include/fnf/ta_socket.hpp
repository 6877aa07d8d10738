#pragma once

// TA platform over a loopback TCP socket. One batch per line in, one command
// list per line out; same JSON as the in-process exchange.

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

#include "fnf/error.hpp"
#include "fnf/ta_platform.hpp"

namespace fnf {

namespace detail {

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  Fd(Fd&& o) noexcept : fd_(o.fd_) { o.fd_ = -1; }
  Fd& operator=(Fd&& o) noexcept {
    if (this != &o) {
      reset();
      fd_ = o.fd_;
      o.fd_ = -1;
    }
    return *this;
  }
  ~Fd() { reset(); }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }
  int get() const noexcept { return fd_; }
  explicit operator bool() const noexcept { return fd_ >= 0; }

 private:
  int fd_ = -1;
};

inline void write_all(int fd, std::string_view data) {
  while (!data.empty()) {
    const auto n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw ProtocolError(std::string("send failed: ") + std::strerror(errno));
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

// Buffered line reader; false on clean EOF.
class LineReader {
 public:
  explicit LineReader(int fd) : fd_(fd) {}
  bool next(std::string& line) {
    for (;;) {
      if (auto nl = buf_.find('\n'); nl != std::string::npos) {
        line.assign(buf_, 0, nl);
        buf_.erase(0, nl + 1);
        return true;
      }
      char chunk[65536];
      const auto n = ::recv(fd_, chunk, sizeof chunk, 0);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw ProtocolError(std::string("recv failed: ") + std::strerror(errno));
      }
      if (n == 0) {
        if (buf_.empty()) return false;
        line = std::move(buf_);
        buf_.clear();
        return true;
      }
      buf_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  int fd_;
  std::string buf_;
};

}  // namespace detail

// Serves one TaPlatform on 127.0.0.1. Connections are handled one at a time.
class TaServer {
 public:
  // port 0 picks a free port; see port().
  TaServer(TaPlatform& platform, std::uint16_t port = 0) : platform_(platform) {
    listen_ = detail::Fd(::socket(AF_INET, SOCK_STREAM, 0));
    if (!listen_) throw ProtocolError("socket() failed");
    int one = 1;
    ::setsockopt(listen_.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(port);
    if (::bind(listen_.get(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0)
      throw ProtocolError(std::string("bind failed: ") + std::strerror(errno));
    if (::listen(listen_.get(), 4) != 0) throw ProtocolError("listen failed");
    socklen_t len = sizeof addr;
    ::getsockname(listen_.get(), reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
  }

  std::uint16_t port() const noexcept { return port_; }

  // Accepts and serves connections until stop() or `max_connections` served.
  void serve(std::size_t max_connections = SIZE_MAX) {
    for (std::size_t served = 0; served < max_connections && !stop_; ++served) {
      detail::Fd conn(::accept(listen_.get(), nullptr, nullptr));
      if (!conn) {
        if (stop_) return;
        if (errno == EINTR) continue;
        throw ProtocolError(std::string("accept failed: ") + std::strerror(errno));
      }
      detail::LineReader reader(conn.get());
      std::string line;
      while (reader.next(line)) {
        std::string reply;
        try {
          reply = platform_.exchange(line);
        } catch (const ProtocolError&) {
          reply = "[]";
        }
        detail::write_all(conn.get(), reply + "\n");
      }
    }
  }

  void stop() {
    stop_ = true;
    ::shutdown(listen_.get(), SHUT_RDWR);
  }

 private:
  TaPlatform& platform_;
  detail::Fd listen_;
  std::uint16_t port_ = 0;
  std::atomic<bool> stop_{false};
};

// Gateway-side handle; satisfies TaEndpoint.
class TaClient {
 public:
  explicit TaClient(std::uint16_t port, const char* host = "127.0.0.1") {
    fd_ = detail::Fd(::socket(AF_INET, SOCK_STREAM, 0));
    if (!fd_) throw ProtocolError("socket() failed");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host, &addr.sin_addr) != 1) throw ProtocolError(std::string("bad host ") + host);
    if (::connect(fd_.get(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0)
      throw ProtocolError(std::string("connect failed: ") + std::strerror(errno));
    reader_.emplace(fd_.get());
  }

  std::string exchange(std::string_view batch) {
    detail::write_all(fd_.get(), std::string(batch) + "\n");
    std::string line;
    if (!reader_->next(line)) throw ProtocolError("server closed the connection");
    return line;
  }

 private:
  detail::Fd fd_;
  std::optional<detail::LineReader> reader_;
};

}  // namespace fnf
