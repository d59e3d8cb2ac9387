#include "scanlab/socket_transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "scanlab/engine.hpp"

namespace scanlab {

namespace {

void store_u32_le(std::uint32_t v, std::byte* out) {
  for (int i = 0; i < 4; ++i) {
    out[i] = static_cast<std::byte>(v & 0xFF);
    v >>= 8;
  }
}

std::uint32_t load_u32_le(const std::byte* in) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) {
    v = (v << 8) | static_cast<std::uint32_t>(in[i]);
  }
  return v;
}

[[noreturn]] void throw_errno(const std::string& what) {
  throw std::runtime_error(what + ": " + std::strerror(errno));
}

void write_all(int fd, const std::byte* data, std::size_t len) {
  while (len > 0) {
    const ssize_t n = ::send(fd, data, len, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw_errno("socket write failed");
    }
    data += n;
    len -= static_cast<std::size_t>(n);
  }
}

// Returns false on clean EOF at a frame boundary (start == true).
bool read_all(int fd, std::byte* data, std::size_t len, bool start) {
  std::size_t got = 0;
  while (got < len) {
    const ssize_t n = ::recv(fd, data + got, len - got, 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw_errno("socket read failed");
    }
    if (n == 0) {
      if (start && got == 0) return false;
      throw std::runtime_error("peer closed mid-frame");
    }
    got += static_cast<std::size_t>(n);
  }
  return true;
}

}  // namespace

std::array<std::byte, kFrameHeaderSize> encode_frame_header(
    std::uint32_t round, std::uint32_t source, std::uint32_t payload_len) {
  std::array<std::byte, kFrameHeaderSize> out;
  std::copy(kFrameMagic.begin(), kFrameMagic.end(), out.begin());
  out[4] = static_cast<std::byte>(kWireVersion);
  store_u32_le(round, out.data() + 5);
  store_u32_le(source, out.data() + 9);
  store_u32_le(payload_len, out.data() + 13);
  return out;
}

FrameHeader decode_frame_header(
    std::span<const std::byte, kFrameHeaderSize> bytes) {
  if (!std::equal(kFrameMagic.begin(), kFrameMagic.end(), bytes.begin())) {
    throw std::runtime_error("frame corruption: bad magic");
  }
  if (bytes[4] != static_cast<std::byte>(kWireVersion)) {
    throw std::runtime_error(
        "frame corruption: unsupported protocol version " +
        std::to_string(static_cast<unsigned>(bytes[4])));
  }
  FrameHeader h;
  h.round = load_u32_le(bytes.data() + 5);
  h.source = load_u32_le(bytes.data() + 9);
  h.payload_len = load_u32_le(bytes.data() + 13);
  return h;
}

std::vector<PeerAddress> parse_peer_table(std::istream& in, std::int64_t p) {
  std::vector<PeerAddress> peers(static_cast<std::size_t>(p));
  std::vector<bool> seen(static_cast<std::size_t>(p), false);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::int64_t rank = -1;
    PeerAddress addr;
    if (!(ls >> rank >> addr.host >> addr.port)) {
      throw std::invalid_argument("peer table: malformed line '" + line + "'");
    }
    if (rank < 0 || rank >= p) {
      throw std::invalid_argument("peer table: rank " + std::to_string(rank) +
                                  " outside [0, " + std::to_string(p) + ")");
    }
    if (seen[static_cast<std::size_t>(rank)]) {
      throw std::invalid_argument("peer table: duplicate rank " +
                                  std::to_string(rank));
    }
    seen[static_cast<std::size_t>(rank)] = true;
    peers[static_cast<std::size_t>(rank)] = std::move(addr);
  }
  for (std::int64_t r = 0; r < p; ++r) {
    if (!seen[static_cast<std::size_t>(r)]) {
      throw std::invalid_argument("peer table: missing rank " +
                                  std::to_string(r));
    }
  }
  return peers;
}

std::vector<PeerAddress> local_peer_table(std::int64_t p,
                                          std::uint16_t base_port) {
  std::vector<PeerAddress> peers;
  peers.reserve(static_cast<std::size_t>(p));
  for (std::int64_t r = 0; r < p; ++r) {
    peers.push_back(
        {"127.0.0.1", static_cast<std::uint16_t>(base_port + r)});
  }
  return peers;
}

SocketCommunicator::SocketCommunicator(std::int64_t rank,
                                       std::vector<PeerAddress> peers,
                                       std::chrono::milliseconds recv_timeout,
                                       int connect_attempts,
                                       std::chrono::milliseconds connect_backoff)
    : rank_(rank), peers_(std::move(peers)), recv_timeout_(recv_timeout),
      connect_attempts_(connect_attempts), connect_backoff_(connect_backoff) {
  const PeerAddress& self = peers_.at(static_cast<std::size_t>(rank_));

  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw_errno("socket()");
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);

  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(self.port);
  addr.sin_addr.s_addr = htonl(INADDR_ANY);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) <
      0) {
    const int e = errno;
    ::close(listen_fd_);
    listen_fd_ = -1;
    errno = e;
    throw_errno("bind to port " + std::to_string(self.port) + " for rank " +
                std::to_string(rank_));
  }
  if (::listen(listen_fd_, static_cast<int>(peers_.size()) + 1) < 0) {
    const int e = errno;
    ::close(listen_fd_);
    listen_fd_ = -1;
    errno = e;
    throw_errno("listen()");
  }
  accept_thread_ = std::thread([this] { accept_loop(); });
}

SocketCommunicator::~SocketCommunicator() { close(); }

void SocketCommunicator::close() {
  {
    std::lock_guard lock(inbox_mu_);
    if (closing_) return;
    closing_ = true;
  }
  // Shutting the listener down makes the blocked accept() return.
  if (listen_fd_ >= 0) {
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    listen_fd_ = -1;
  }
  if (accept_thread_.joinable()) accept_thread_.join();
  for (auto& [peer, fd] : out_fds_) {
    ::shutdown(fd, SHUT_RDWR);
    ::close(fd);
  }
  out_fds_.clear();
  // Unblock every reader, join, then release the fds.
  std::vector<InboundConn> inbound;
  {
    std::lock_guard lock(inbound_mu_);
    inbound.swap(inbound_);
  }
  for (auto& conn : inbound) ::shutdown(conn.fd, SHUT_RDWR);
  for (auto& conn : inbound) {
    if (conn.reader.joinable()) conn.reader.join();
    ::close(conn.fd);
  }
  inbox_cv_.notify_all();
}

void SocketCommunicator::accept_loop() {
  while (true) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      return;  // listener closed
    }
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    std::lock_guard lock(inbound_mu_);
    inbound_.push_back({fd, std::thread([this, fd] { reader_loop(fd); })});
  }
}

void SocketCommunicator::reader_loop(int fd) {
  std::array<std::byte, kFrameHeaderSize> header;
  try {
    while (true) {
      if (!read_all(fd, header.data(), header.size(), /*start=*/true)) {
        break;  // clean close
      }
      const FrameHeader h = decode_frame_header(header);
      std::vector<std::byte> payload(h.payload_len);
      if (h.payload_len > 0) {
        read_all(fd, payload.data(), payload.size(), /*start=*/false);
      }
      {
        std::lock_guard lock(inbox_mu_);
        inbox_[InboxKey{h.source, h.round}] = std::move(payload);
      }
      inbox_cv_.notify_all();
    }
  } catch (const std::exception& e) {
    fail_inbox(e.what());
  }
  // The fd stays open; teardown owns and closes it.
}

void SocketCommunicator::fail_inbox(const std::string& reason) {
  {
    std::lock_guard lock(inbox_mu_);
    if (!closing_ && inbox_error_.empty()) inbox_error_ = reason;
  }
  inbox_cv_.notify_all();
}

int SocketCommunicator::connection_to(std::int64_t peer) {
  if (auto it = out_fds_.find(peer); it != out_fds_.end()) return it->second;

  const PeerAddress& addr = peers_.at(static_cast<std::size_t>(peer));
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string port_str = std::to_string(addr.port);
  if (::getaddrinfo(addr.host.c_str(), port_str.c_str(), &hints, &res) != 0 ||
      !res) {
    throw std::runtime_error("cannot resolve peer " + addr.host + ":" +
                             port_str + " (rank " + std::to_string(peer) +
                             ")");
  }

  int fd = -1;
  int attempt = 0;
  for (;;) {
    fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
    if (fd < 0) {
      ::freeaddrinfo(res);
      throw_errno("socket()");
    }
    if (::connect(fd, res->ai_addr, res->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
    if (++attempt >= connect_attempts_) {
      ::freeaddrinfo(res);
      throw std::runtime_error("cannot connect to peer " + addr.host + ":" +
                               port_str + " (rank " + std::to_string(peer) +
                               ") after " + std::to_string(attempt) +
                               " attempts");
    }
    std::this_thread::sleep_for(connect_backoff_);
  }
  ::freeaddrinfo(res);
  const int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  out_fds_[peer] = fd;
  return fd;
}

void SocketCommunicator::exchange(std::uint64_t round,
                                  std::optional<std::int64_t> send_to,
                                  std::span<const std::byte> payload,
                                  std::optional<std::int64_t> recv_from,
                                  ElementVector& recv_buf) {
  if (round > std::numeric_limits<std::uint32_t>::max()) {
    throw std::invalid_argument("round tag exceeds the wire format's u32");
  }
  if (send_to) {
    const int fd = connection_to(*send_to);
    const auto header =
        encode_frame_header(static_cast<std::uint32_t>(round),
                            static_cast<std::uint32_t>(rank_),
                            static_cast<std::uint32_t>(payload.size()));
    // Header and payload in one buffered write keeps small frames to a
    // single segment.
    std::vector<std::byte> frame;
    frame.reserve(header.size() + payload.size());
    frame.insert(frame.end(), header.begin(), header.end());
    frame.insert(frame.end(), payload.begin(), payload.end());
    write_all(fd, frame.data(), frame.size());
  }
  if (recv_from) {
    const InboxKey key{static_cast<std::uint32_t>(*recv_from),
                       static_cast<std::uint32_t>(round)};
    std::unique_lock lock(inbox_mu_);
    const bool ok = inbox_cv_.wait_for(lock, recv_timeout_, [&] {
      return inbox_.contains(key) || !inbox_error_.empty();
    });
    if (!inbox_error_.empty()) {
      throw std::runtime_error("transport failure: " + inbox_error_);
    }
    if (!ok) {
      throw ReceiveTimeout("receive timed out at rank " +
                           std::to_string(rank_) + " round " +
                           std::to_string(round) + " waiting for rank " +
                           std::to_string(*recv_from));
    }
    auto node = inbox_.extract(key);
    const auto& bytes = node.mapped();
    if (bytes.size() != recv_buf.byte_size()) {
      throw std::runtime_error(
          "received payload of " + std::to_string(bytes.size()) +
          " bytes from rank " + std::to_string(*recv_from) + ", expected " +
          std::to_string(recv_buf.byte_size()));
    }
    std::copy(bytes.begin(), bytes.end(), recv_buf.bytes().begin());
  }
}

SocketRunResult socket_execute(const SocketRunConfig& config,
                               const ElementVector& input,
                               const OperatorSpec& op) {
  if (config.p < 1 ||
      static_cast<std::size_t>(config.p) != config.peers.size()) {
    throw std::invalid_argument("socket_execute: peer table size must be p");
  }
  if (config.reps < 1 || config.warmups < 0) {
    throw std::invalid_argument("socket_execute: reps must be >= 1");
  }

  SocketRunResult result;
  result.rep_seconds.reserve(static_cast<std::size_t>(config.reps));

  if (config.p == 1) {
    // Nothing to exchange; still run the engine so metrics and output are
    // uniform with the multi-process path.
    for (int rep = 0; rep < config.warmups + config.reps; ++rep) {
      const auto t0 = std::chrono::steady_clock::now();
      MessageRouter router;
      RouterChannel chan(router, 0, 1, config.recv_timeout);
      RankRunResult r = run_rank(config.algo, 0, 1, input, op, chan,
                                 config.record_trace);
      const auto t1 = std::chrono::steady_clock::now();
      if (rep >= config.warmups) {
        result.rep_seconds.push_back(
            std::chrono::duration<double>(t1 - t0).count());
      }
      result.output = std::move(r.output);
      result.metrics = r.metrics;
      result.trace = std::move(r.trace);
    }
    return result;
  }

  SocketCommunicator comm(config.rank, config.peers, config.recv_timeout);

  // Tag layout: each repetition gets a disjoint band for protocol rounds,
  // with a sub-band reserved for the two pre-rep barriers.
  constexpr std::uint64_t kRepStride = 1u << 12;
  constexpr std::uint64_t kBarrierBand = 1u << 11;

  const int total = config.warmups + config.reps;
  for (int rep = 0; rep < total; ++rep) {
    const std::uint64_t band = static_cast<std::uint64_t>(rep) * kRepStride;
    dissemination_barrier(comm, band + kBarrierBand);
    dissemination_barrier(comm, band + kBarrierBand + 64);

    struct OffsetChannel final : Communicator {
      Communicator* base;
      std::uint64_t offset;
      OffsetChannel(Communicator* b, std::uint64_t o) : base(b), offset(o) {}
      std::int64_t rank() const override { return base->rank(); }
      std::int64_t size() const override { return base->size(); }
      void exchange(std::uint64_t round, std::optional<std::int64_t> send_to,
                    std::span<const std::byte> payload,
                    std::optional<std::int64_t> recv_from,
                    ElementVector& recv_buf) override {
        base->exchange(round + offset, send_to, payload, recv_from, recv_buf);
      }
    } chan(&comm, band);

    const bool trace_this_rep = config.record_trace && rep == total - 1;
    const auto t0 = std::chrono::steady_clock::now();
    RankRunResult r = run_rank(config.algo, config.rank, config.p, input, op,
                               chan, trace_this_rep);
    const auto t1 = std::chrono::steady_clock::now();
    if (rep >= config.warmups) {
      result.rep_seconds.push_back(
          std::chrono::duration<double>(t1 - t0).count());
    }
    result.output = std::move(r.output);
    result.metrics = r.metrics;
    if (trace_this_rep) result.trace = std::move(r.trace);
  }

  // Settle before teardown so no peer is still mid-receive when our side
  // closes its connections.
  dissemination_barrier(comm,
                        static_cast<std::uint64_t>(total) * kRepStride +
                            kBarrierBand);
  comm.close();
  return result;
}

}  // namespace scanlab
