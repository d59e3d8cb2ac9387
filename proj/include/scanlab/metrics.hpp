#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

namespace scanlab {

/// Per-rank counters for one run.
struct RankMetrics {
  std::int64_t rank = 0;
  std::uint64_t rounds_active = 0;  // rounds in which this rank sent or received
  /// Operator applications folded into this rank's own result: the quantity
  /// the per-algorithm bounds constrain. Combines computed purely to build
  /// an outgoing payload are not part of the result chain and are counted
  /// per round in TraceEvent::ops_this_round instead.
  std::uint64_t op_applications = 0;
  std::uint64_t messages_sent = 0;
  std::uint64_t messages_received = 0;
  std::uint64_t bytes_sent = 0;

  friend bool operator==(const RankMetrics&, const RankMetrics&) = default;
};

/// What a message payload is, from the sender's point of view.
enum class PayloadKind : std::uint8_t {
  RawInput,       // the rank's untouched input vector
  CombinedSend,   // accumulator combined with own input, built for sending
  PartialResult,  // the rank's current accumulator
};

std::string_view payload_kind_label(PayloadKind k);  // "raw"|"combined"|"partial"

/// One rank's communication action in one round. Receive-only events carry
/// the kind implied by what the receiver did with the payload: RawInput for
/// the round-0 copy, PartialResult for a merge.
struct TraceEvent {
  std::uint64_t round = 0;
  std::int64_t rank = 0;
  std::optional<std::int64_t> sent_to;
  std::optional<std::int64_t> received_from;
  PayloadKind payload_kind = PayloadKind::RawInput;
  /// Every operator invocation this round, send-side combines included; 2
  /// happens when a rank builds a combined payload and merges a receive in
  /// the same round.
  std::uint32_t ops_this_round = 0;  // 0, 1 or 2

  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

}  // namespace scanlab
