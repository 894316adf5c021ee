#pragma once

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "pwstpc/crypto.hpp"
#include "pwstpc/error.hpp"
#include "pwstpc/util.hpp"

namespace pwstpc {

namespace msg {
inline constexpr std::uint8_t kCircuit = 0x01;
inline constexpr std::uint8_t kGarbled = 0x02;
inline constexpr std::uint8_t kLabels = 0x03;
inline constexpr std::uint8_t kOt = 0x04;
inline constexpr std::uint8_t kPublicKey = 0x05;
inline constexpr std::uint8_t kR1 = 0x10;
inline constexpr std::uint8_t kR2 = 0x11;
inline constexpr std::uint8_t kR3 = 0x12;
inline constexpr std::uint8_t kR4 = 0x13;
inline constexpr std::uint8_t kTestDecode = 0x7F;

/// Messages that make up the online rounds (setup, OT and test traffic excluded).
inline bool is_round_message(std::uint8_t type) {
  return type == kGarbled || type == kLabels || (type >= kR1 && type <= kR4);
}
}  // namespace msg

struct Message {
  std::uint8_t type = 0;
  Bytes payload;
};

constexpr std::size_t kFrameHeader = 5;

inline Bytes frame(const Message& m) {
  Bytes out;
  out.reserve(kFrameHeader + m.payload.size());
  out.push_back(m.type);
  put_u32(out, static_cast<std::uint32_t>(m.payload.size()));
  out.insert(out.end(), m.payload.begin(), m.payload.end());
  return out;
}

/// What one party observed on its channel.
class Transcript {
 public:
  struct Entry {
    bool sent;
    std::uint8_t type;
    std::size_t payload_bytes;
  };

  /// Chains h' = SHA-256(h || direction || frame) over every message.
  void record(bool sent, const Message& m) {
    entries_.push_back({sent, m.type, m.payload.size()});
    const std::uint8_t dir = sent ? 'S' : 'R';
    chain_ = Sha256().update(chain_).update(std::span(&dir, 1)).update(frame(m)).finish();
  }

  const std::vector<Entry>& entries() const { return entries_; }
  const Digest& digest() const { return chain_; }

  std::size_t bytes(bool sent, bool with_framing = true) const {
    std::size_t n = 0;
    for (const auto& e : entries_)
      if (e.sent == sent) n += e.payload_bytes + (with_framing ? kFrameHeader : 0);
    return n;
  }
  std::size_t payload_bytes_of(std::uint8_t type) const {
    std::size_t n = 0;
    for (const auto& e : entries_)
      if (e.type == type) n += e.payload_bytes;
    return n;
  }
  std::size_t messages() const { return entries_.size(); }
  std::size_t messages_of(std::uint8_t type) const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.type == type;
    return n;
  }

  /// Maximal runs of same-direction round messages.
  unsigned rounds() const {
    unsigned n = 0;
    int last = -1;
    for (const auto& e : entries_) {
      if (!msg::is_round_message(e.type)) continue;
      if (static_cast<int>(e.sent) != last) ++n;
      last = e.sent;
    }
    return n;
  }

 private:
  std::vector<Entry> entries_;
  Digest chain_{};
};

/// Ordered, reliable, bidirectional message channel. One sender and one
/// receiver thread per direction.
class Channel {
 public:
  virtual ~Channel() = default;

  void send(std::uint8_t type, Bytes payload) {
    Message m{type, std::move(payload)};
    do_send(m);
    transcript_.record(true, m);
  }

  Message recv() {
    Message m = do_recv();
    transcript_.record(false, m);
    return m;
  }

  /// Receives and insists on a message type.
  Bytes expect(std::uint8_t type) {
    Message m = recv();
    if (m.type != type)
      throw FormatError("expected message type " + std::to_string(type) + ", got " + std::to_string(m.type));
    return std::move(m.payload);
  }

  virtual void close() = 0;

  const Transcript& transcript() const { return transcript_; }

 protected:
  virtual void do_send(const Message& m) = 0;
  virtual Message do_recv() = 0;

 private:
  Transcript transcript_;
};

namespace detail {

struct MessageQueue {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<Message> items;
  bool closed = false;

  void push(Message m) {
    {
      std::lock_guard lock(mu);
      if (closed) throw TransportError("channel closed");
      items.push_back(std::move(m));
    }
    cv.notify_one();
  }
  Message pop() {
    std::unique_lock lock(mu);
    cv.wait(lock, [&] { return closed || !items.empty(); });
    if (items.empty()) throw TransportError("channel closed by peer");
    Message m = std::move(items.front());
    items.pop_front();
    return m;
  }
  void close() {
    {
      std::lock_guard lock(mu);
      closed = true;
    }
    cv.notify_all();
  }
};

}  // namespace detail

/// One end of an in-process channel pair.
class LocalChannel : public Channel {
 public:
  LocalChannel(std::shared_ptr<detail::MessageQueue> in, std::shared_ptr<detail::MessageQueue> out)
      : in_(std::move(in)), out_(std::move(out)) {}
  ~LocalChannel() override { close(); }

  void close() override {
    out_->close();
    in_->close();
  }

 protected:
  void do_send(const Message& m) override { out_->push(m); }
  Message do_recv() override { return in_->pop(); }

 private:
  std::shared_ptr<detail::MessageQueue> in_, out_;
};

inline std::pair<std::unique_ptr<Channel>, std::unique_ptr<Channel>> make_local_pair() {
  auto ab = std::make_shared<detail::MessageQueue>();
  auto ba = std::make_shared<detail::MessageQueue>();
  return {std::make_unique<LocalChannel>(ba, ab), std::make_unique<LocalChannel>(ab, ba)};
}

/// Framed TCP: type(1) + length(4, big-endian) + payload.
class TcpChannel : public Channel {
 public:
  explicit TcpChannel(int fd) : fd_(fd) {
    int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  }
  ~TcpChannel() override { close(); }
  TcpChannel(const TcpChannel&) = delete;
  TcpChannel& operator=(const TcpChannel&) = delete;

  void close() override {
    if (fd_ >= 0) {
      ::shutdown(fd_, SHUT_RDWR);
      ::close(fd_);
      fd_ = -1;
    }
  }

 protected:
  void do_send(const Message& m) override {
    const Bytes f = frame(m);
    std::size_t off = 0;
    while (off < f.size()) {
      ssize_t n = ::send(fd_, f.data() + off, f.size() - off, MSG_NOSIGNAL);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) throw TransportError(std::string("send failed: ") + std::strerror(errno));
      off += static_cast<std::size_t>(n);
    }
  }

  Message do_recv() override {
    std::uint8_t header[kFrameHeader];
    read_exact(header, sizeof header);
    Message m;
    m.type = header[0];
    const std::uint32_t len = get_u32(std::span<const std::uint8_t>(header, kFrameHeader), 1);
    if (len > (1u << 30)) throw TransportError("frame too large");
    m.payload.resize(len);
    read_exact(m.payload.data(), len);
    return m;
  }

 private:
  void read_exact(std::uint8_t* p, std::size_t len) {
    if (fd_ < 0) throw TransportError("channel closed");
    std::size_t off = 0;
    while (off < len) {
      ssize_t n = ::recv(fd_, p + off, len - off, 0);
      if (n < 0 && errno == EINTR) continue;
      if (n == 0) throw TransportError("connection closed by peer");
      if (n < 0) throw TransportError(std::string("recv failed: ") + std::strerror(errno));
      off += static_cast<std::size_t>(n);
    }
  }

  int fd_;
};

/// Splits "host:port".
inline std::pair<std::string, std::uint16_t> parse_endpoint(const std::string& s) {
  const auto colon = s.rfind(':');
  if (colon == std::string::npos) throw InvalidArgument("endpoint must be HOST:PORT, got '" + s + "'");
  unsigned long port = 0;
  try {
    port = std::stoul(s.substr(colon + 1));
  } catch (const std::exception&) {
    throw InvalidArgument("bad port in '" + s + "'");
  }
  if (port > 65535) throw InvalidArgument("bad port in '" + s + "'");
  std::string host = s.substr(0, colon);
  if (host.empty()) host = "127.0.0.1";
  return {host, static_cast<std::uint16_t>(port)};
}

class TcpListener {
 public:
  /// Port 0 picks a free port; see port().
  TcpListener(const std::string& host, std::uint16_t port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw TransportError("socket failed");
    int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host == "localhost" ? "127.0.0.1" : host.c_str(), &addr.sin_addr) != 1) {
      ::close(fd_);
      throw TransportError("listen address must be a dotted IPv4 address: " + host);
    }
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(fd_, 4) != 0) {
      const std::string why = std::strerror(errno);
      ::close(fd_);
      throw TransportError("cannot listen on " + host + ":" + std::to_string(port) + ": " + why);
    }
    socklen_t len = sizeof addr;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
  }
  ~TcpListener() {
    if (fd_ >= 0) ::close(fd_);
  }
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  std::uint16_t port() const { return port_; }

  std::unique_ptr<Channel> accept() {
    int fd = ::accept(fd_, nullptr, nullptr);
    if (fd < 0) throw TransportError(std::string("accept failed: ") + std::strerror(errno));
    return std::make_unique<TcpChannel>(fd);
  }

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

/// Connects, retrying while the peer is not yet listening.
inline std::unique_ptr<Channel> tcp_connect(const std::string& host, std::uint16_t port,
                                            std::chrono::milliseconds patience = std::chrono::seconds(10)) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0 || !res)
    throw TransportError("cannot resolve " + host);
  std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> guard(res, &::freeaddrinfo);
  const auto deadline = std::chrono::steady_clock::now() + patience;
  for (;;) {
    int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
    if (fd < 0) throw TransportError("socket failed");
    if (::connect(fd, res->ai_addr, res->ai_addrlen) == 0) return std::make_unique<TcpChannel>(fd);
    const std::string why = std::strerror(errno);
    ::close(fd);
    if (std::chrono::steady_clock::now() >= deadline)
      throw TransportError("cannot connect to " + host + ":" + std::to_string(port) + ": " + why);
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
}

}  // namespace pwstpc
