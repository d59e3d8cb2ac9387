#pragma once

#include <array>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <istream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "scanlab/algorithm.hpp"
#include "scanlab/communicator.hpp"
#include "scanlab/element_vector.hpp"
#include "scanlab/metrics.hpp"
#include "scanlab/operators.hpp"
#include "scanlab/thread_transport.hpp"  // ReceiveTimeout, default_recv_timeout

namespace scanlab {

// Wire frame: "XSCN" | version u8=1 | round u32 LE | source u32 LE |
// payload length u32 LE | payload bytes.
inline constexpr std::array<std::byte, 4> kFrameMagic = {
    std::byte{'X'}, std::byte{'S'}, std::byte{'C'}, std::byte{'N'}};
inline constexpr std::uint8_t kWireVersion = 1;
inline constexpr std::size_t kFrameHeaderSize = 17;

struct FrameHeader {
  std::uint32_t round = 0;
  std::uint32_t source = 0;
  std::uint32_t payload_len = 0;
};

std::array<std::byte, kFrameHeaderSize> encode_frame_header(
    std::uint32_t round, std::uint32_t source, std::uint32_t payload_len);

/// Throws std::runtime_error on bad magic or version.
FrameHeader decode_frame_header(
    std::span<const std::byte, kFrameHeaderSize> bytes);

struct PeerAddress {
  std::string host;
  std::uint16_t port = 0;
};

/// Peer table: one line per rank, "rank host port", LF-terminated ASCII.
/// Ranks must appear exactly once each, in any order.
std::vector<PeerAddress> parse_peer_table(std::istream& in, std::int64_t p);

/// All-local peer table: rank i listens on base_port + i.
std::vector<PeerAddress> local_peer_table(std::int64_t p,
                                          std::uint16_t base_port);

/// TCP communicator for one rank of a multi-process run. Listens on its own
/// peer-table port; dials peers lazily on first send and keeps connections
/// open. A background accept loop and per-connection readers demultiplex
/// inbound frames by (source, round) into a rendezvous table the exchange
/// call blocks on.
class SocketCommunicator final : public Communicator {
 public:
  SocketCommunicator(std::int64_t rank, std::vector<PeerAddress> peers,
                     std::chrono::milliseconds recv_timeout,
                     int connect_attempts = 20,
                     std::chrono::milliseconds connect_backoff =
                         std::chrono::milliseconds(250));
  ~SocketCommunicator() override;

  SocketCommunicator(const SocketCommunicator&) = delete;
  SocketCommunicator& operator=(const SocketCommunicator&) = delete;

  std::int64_t rank() const override { return rank_; }
  std::int64_t size() const override {
    return static_cast<std::int64_t>(peers_.size());
  }
  void exchange(std::uint64_t round, std::optional<std::int64_t> send_to,
                std::span<const std::byte> payload,
                std::optional<std::int64_t> recv_from,
                ElementVector& recv_buf) override;

  /// Stops the accept loop and closes every connection. Called by the
  /// destructor; safe to call twice.
  void close();

 private:
  struct InboxKey {
    std::uint32_t source;
    std::uint32_t round;
    auto operator<=>(const InboxKey&) const = default;
  };

  void accept_loop();
  void reader_loop(int fd);
  int connection_to(std::int64_t peer);
  void fail_inbox(const std::string& reason);

  std::int64_t rank_;
  std::vector<PeerAddress> peers_;
  std::chrono::milliseconds recv_timeout_;
  int connect_attempts_;
  std::chrono::milliseconds connect_backoff_;

  int listen_fd_ = -1;
  std::thread accept_thread_;
  // Inbound connections: fds stay owned here (readers never close them), so
  // teardown can shut them down to unblock readers, join, then close.
  struct InboundConn {
    int fd;
    std::thread reader;
  };
  std::vector<InboundConn> inbound_;
  std::mutex inbound_mu_;

  std::map<std::int64_t, int> out_fds_;

  std::mutex inbox_mu_;
  std::condition_variable inbox_cv_;
  std::map<InboxKey, std::vector<std::byte>> inbox_;
  std::string inbox_error_;  // sticky transport failure, reported to waiters
  bool closing_ = false;
};

/// One process's role in a socket-transport run.
struct SocketRunConfig {
  std::int64_t rank = 0;
  std::int64_t p = 1;
  std::vector<PeerAddress> peers;  // size p
  ScanAlgorithm algo = ScanAlgorithm::OneTwoThreeDoubling;
  std::chrono::milliseconds recv_timeout = default_recv_timeout();
  /// Timed repetitions (>= 1). Each is preceded by two all-rank barriers
  /// and timed locally; warmup repetitions are run first and not timed.
  int reps = 1;
  int warmups = 0;
  bool record_trace = true;  // trace/metrics come from the last repetition
};

/// This process's slice of the run report.
struct SocketRunResult {
  std::optional<ElementVector> output;
  RankMetrics metrics;
  std::vector<TraceEvent> trace;
  std::vector<double> rep_seconds;  // local duration of each timed rep
};

/// Runs this process's rank over TCP against the peer table. Single-process
/// runs (p = 1) open no sockets at all.
SocketRunResult socket_execute(const SocketRunConfig& config,
                               const ElementVector& input,
                               const OperatorSpec& op);

}  // namespace scanlab
