#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "scanlab/algorithm.hpp"
#include "scanlab/communicator.hpp"
#include "scanlab/element_vector.hpp"
#include "scanlab/metrics.hpp"
#include "scanlab/operators.hpp"

namespace scanlab {

/// What one rank does in one round: at most one outgoing message and at most
/// one expected source, per the one-ported model. The payload span points
/// into the owning RankState and stays valid until the next step_end call.
struct RoundAction {
  struct Outgoing {
    std::int64_t to = 0;
    PayloadKind kind = PayloadKind::RawInput;
    std::span<const std::byte> payload;
  };
  std::optional<Outgoing> outgoing;
  std::optional<std::int64_t> expected_from;
};

/// One rank's protocol state, advanced one round at a time with
/// step_begin/step_end pairs. All four algorithms share this machine; the
/// per-algorithm differences live entirely in the schedule (partners) and in
/// the payload selection table of step_begin.
///
/// The accumulator invariant after round k completes: the accumulator equals
/// the fold of the trailing coverage(algo, k)-wide window of inputs (ending
/// at rank-1 for exclusive variants, at rank for the inclusive scan),
/// clamped at rank 0.
class RankState {
 public:
  /// The operator must outlive the state.
  RankState(ScanAlgorithm algo, std::int64_t rank, std::int64_t size,
            ElementVector input, const OperatorSpec& op);

  /// Opens round k: returns this round's action without touching the
  /// accumulator (combined send payloads are built in a scratch buffer and
  /// their operator application lands in op_invocations, not in the
  /// result-chain metric). Throws if the rank is already done or the round
  /// is open.
  RoundAction step_begin();

  /// Closes the round with the message that arrived (nullptr when none was
  /// expected). Round 0 of the exclusive variants copies the payload into
  /// the accumulator; every other receive merges it on the left. Advances
  /// the round index and derives done-ness from the partner schedule.
  void step_end(const ElementVector* incoming);

  bool done() const { return done_; }
  bool round_open() const { return round_open_; }
  std::uint64_t round() const { return round_; }
  std::int64_t rank() const { return rank_; }
  std::int64_t size() const { return size_; }
  ScanAlgorithm algorithm() const { return algo_; }

  const ElementVector& input() const { return input_; }
  /// Exclusive variants at rank 0 never have a result.
  bool has_result() const { return has_acc_; }
  const ElementVector& result() const;

  const RankMetrics& metrics() const { return metrics_; }
  /// Total operator invocations so far, send-side combines included
  /// (metrics().op_applications counts only the result-chain merges).
  std::uint64_t op_invocations() const { return op_invocations_; }

 private:
  ScanAlgorithm algo_;
  std::int64_t rank_;
  std::int64_t size_;
  const OperatorSpec* op_;
  ElementVector input_;
  ElementVector acc_;       // the eventual output
  ElementVector combined_;  // scratch for acc ⊕ input send payloads
  bool has_acc_ = false;
  std::uint64_t round_ = 0;
  bool done_ = false;
  bool round_open_ = false;
  bool expecting_ = false;
  std::uint64_t op_invocations_ = 0;
  RankMetrics metrics_;

  void refresh_done();
};

/// Result of running one rank to completion.
struct RankRunResult {
  std::optional<ElementVector> output;
  RankMetrics metrics;
  std::vector<TraceEvent> trace;  // empty unless record_trace
};

/// Drives a RankState over a Communicator until done. All ranks of the
/// collective must call this with identical algo, op and input shape. When a
/// round both sends and receives, the two are issued as one simultaneous
/// exchange, never send-then-receive. Size-1 runs complete without any
/// communication. Communicator failures propagate with rank/round context.
RankRunResult run_rank(ScanAlgorithm algo, std::int64_t rank,
                       std::int64_t size, ElementVector input,
                       const OperatorSpec& op, Communicator& comm,
                       bool record_trace = false);

}  // namespace scanlab
