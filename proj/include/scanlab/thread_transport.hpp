#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <span>
#include <vector>

#include "scanlab/algorithm.hpp"
#include "scanlab/communicator.hpp"
#include "scanlab/operators.hpp"
#include "scanlab/run_report.hpp"

namespace scanlab {

/// A blocked receive gave up waiting. Carries rank/round/source context in
/// the message.
class ReceiveTimeout : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Receive timeout: SCANLAB_RECV_TIMEOUT_MS when set (must parse as a
/// positive integer), otherwise 10 s.
std::chrono::milliseconds default_recv_timeout();

/// In-process mailbox keyed by (source, destination, round). Deposits never
/// block (the eager-send contract); awaits block until the matching message
/// arrives or the timeout fires. Safe for concurrent use by one thread per
/// rank.
class MessageRouter {
 public:
  /// Test hook: messages for which this returns true are silently dropped,
  /// so the matching receive times out.
  using DropFilter =
      std::function<bool(std::int64_t src, std::int64_t dst, std::uint64_t round)>;

  MessageRouter() = default;
  explicit MessageRouter(DropFilter drop) : drop_(std::move(drop)) {}

  void deposit(std::int64_t src, std::int64_t dst, std::uint64_t round,
               std::span<const std::byte> payload);
  std::vector<std::byte> await(std::int64_t src, std::int64_t dst,
                               std::uint64_t round,
                               std::chrono::milliseconds timeout);

 private:
  struct Key {
    std::int64_t src;
    std::int64_t dst;
    std::uint64_t round;
    auto operator<=>(const Key&) const = default;
  };
  std::mutex mu_;
  std::condition_variable cv_;
  std::map<Key, std::vector<std::byte>> mailbox_;
  DropFilter drop_;
};

/// Communicator over a shared MessageRouter; one instance per rank thread.
/// An optional tag offset shifts every round number, letting repeated runs
/// (benchmark repetitions) share one router without tag collisions.
class RouterChannel final : public Communicator {
 public:
  RouterChannel(MessageRouter& router, std::int64_t rank, std::int64_t size,
                std::chrono::milliseconds recv_timeout,
                std::uint64_t tag_offset = 0)
      : router_(&router), rank_(rank), size_(size),
        recv_timeout_(recv_timeout), tag_offset_(tag_offset) {}

  std::int64_t rank() const override { return rank_; }
  std::int64_t size() const override { return size_; }
  void exchange(std::uint64_t round, std::optional<std::int64_t> send_to,
                std::span<const std::byte> payload,
                std::optional<std::int64_t> recv_from,
                ElementVector& recv_buf) override;

 private:
  MessageRouter* router_;
  std::int64_t rank_;
  std::int64_t size_;
  std::chrono::milliseconds recv_timeout_;
  std::uint64_t tag_offset_;
};

struct ThreadedOptions {
  std::chrono::milliseconds recv_timeout = default_recv_timeout();
  std::int64_t max_workers = 512;
  bool record_trace = true;
  MessageRouter::DropFilter drop_message;  // test fault injection
};

/// Runs the collective with one worker thread per rank over a shared
/// router. Outputs are bit-identical to lockstep_execute; trace events are
/// collected per rank and reported in (round, rank) order.
RunReport threaded_execute(ScanAlgorithm algo, std::int64_t p,
                           std::span<const ElementVector> inputs,
                           const OperatorSpec& op, ThreadedOptions opts = {});

}  // namespace scanlab
