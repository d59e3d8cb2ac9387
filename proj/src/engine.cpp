#include "scanlab/engine.hpp"

#include <stdexcept>
#include <string>
#include <utility>

#include "scanlab/schedule.hpp"

namespace scanlab {

RankState::RankState(ScanAlgorithm algo, std::int64_t rank, std::int64_t size,
                     ElementVector input, const OperatorSpec& op)
    : algo_(algo), rank_(rank), size_(size), op_(&op),
      input_(std::move(input)) {
  if (rank_ < 0 || rank_ >= size_) {
    throw std::invalid_argument("RankState: rank " + std::to_string(rank_) +
                                " outside [0, " + std::to_string(size_) + ")");
  }
  if (input_.element_width() != op_->element_width) {
    throw std::invalid_argument(
        "RankState: input element width does not match operator " + op_->name);
  }
  metrics_.rank = rank_;
  acc_ = ElementVector(input_.count(), input_.element_width());
  combined_ = ElementVector(input_.count(), input_.element_width());
  if (algo_ == ScanAlgorithm::InclusiveDoubling) {
    acc_ = input_;  // width-1 inclusive prefix
    has_acc_ = true;
  }
  refresh_done();
}

const ElementVector& RankState::result() const {
  if (!has_acc_) {
    throw std::logic_error("RankState: rank " + std::to_string(rank_) +
                           " has no result");
  }
  return acc_;
}

void RankState::refresh_done() {
  if (size_ == 1) {
    done_ = true;
    return;
  }
  // Skips only grow and floors only tighten, so a rank with no partners now
  // never gets one again.
  PartnerPair pp = partners(algo_, size_, rank_, round_);
  done_ = !pp.to && !pp.from;
}

RoundAction RankState::step_begin() {
  if (done_) {
    throw std::logic_error("step_begin: rank " + std::to_string(rank_) +
                           " is already done");
  }
  if (round_open_) {
    throw std::logic_error("step_begin: round already open at rank " +
                           std::to_string(rank_));
  }
  round_open_ = true;

  PartnerPair pp = partners(algo_, size_, rank_, round_);
  RoundAction action;
  action.expected_from = pp.from;
  expecting_ = pp.from.has_value();

  if (pp.to) {
    RoundAction::Outgoing out;
    out.to = *pp.to;
    switch (algo_) {
      case ScanAlgorithm::InclusiveDoubling:
        out.kind = PayloadKind::PartialResult;
        out.payload = acc_.bytes();
        break;
      case ScanAlgorithm::TwoOpDoubling:
        if (round_ == 0 || rank_ == 0) {
          // Rank 0 holds no exclusive partial; its raw input is exactly the
          // clamped window the receiver is missing.
          out.kind = PayloadKind::RawInput;
          out.payload = input_.bytes();
        } else {
          op_->apply_to(acc_, input_, combined_);
          ++op_invocations_;
          out.kind = PayloadKind::CombinedSend;
          out.payload = combined_.bytes();
        }
        break;
      case ScanAlgorithm::OneDoubling:
        if (round_ == 0) {
          out.kind = PayloadKind::RawInput;
          out.payload = input_.bytes();
        } else {
          out.kind = PayloadKind::PartialResult;
          out.payload = acc_.bytes();
        }
        break;
      case ScanAlgorithm::OneTwoThreeDoubling:
        if (round_ == 0 || rank_ == 0) {
          out.kind = PayloadKind::RawInput;
          out.payload = input_.bytes();
        } else if (round_ == 1) {
          op_->apply_to(acc_, input_, combined_);
          ++op_invocations_;
          out.kind = PayloadKind::CombinedSend;
          out.payload = combined_.bytes();
        } else {
          out.kind = PayloadKind::PartialResult;
          out.payload = acc_.bytes();
        }
        break;
    }
    action.outgoing = out;
    ++metrics_.messages_sent;
    metrics_.bytes_sent += out.payload.size();
  }
  if (pp.to || pp.from) {
    ++metrics_.rounds_active;
  }
  return action;
}

void RankState::step_end(const ElementVector* incoming) {
  if (!round_open_) {
    throw std::logic_error("step_end: no round open at rank " +
                           std::to_string(rank_));
  }
  if (expecting_ != (incoming != nullptr)) {
    throw std::logic_error(
        "step_end: incoming message presence does not match the declared "
        "expectation at rank " +
        std::to_string(rank_) + " round " + std::to_string(round_));
  }
  if (incoming) {
    if (!incoming->same_shape(input_)) {
      throw std::invalid_argument("step_end: incoming shape mismatch at rank " +
                                  std::to_string(rank_) + " round " +
                                  std::to_string(round_));
    }
    ++metrics_.messages_received;
    if (is_exclusive(algo_) && round_ == 0) {
      acc_ = *incoming;  // shift: copy establishes the width-1 window
      has_acc_ = true;
    } else {
      // Incoming data originates from lower ranks: it goes on the left.
      op_->fold_left_into(*incoming, acc_);
      ++metrics_.op_applications;
      ++op_invocations_;
    }
  }
  ++round_;
  round_open_ = false;
  expecting_ = false;
  refresh_done();
}

RankRunResult run_rank(ScanAlgorithm algo, std::int64_t rank,
                       std::int64_t size, ElementVector input,
                       const OperatorSpec& op, Communicator& comm,
                       bool record_trace) {
  RankState state(algo, rank, size, std::move(input), op);
  RankRunResult result;
  ElementVector inbox(state.input().count(), state.input().element_width());

  while (!state.done()) {
    const std::uint64_t round = state.round();
    const std::uint64_t inv_before = state.op_invocations();
    RoundAction action = state.step_begin();
    try {
      comm.exchange(round,
                    action.outgoing
                        ? std::optional<std::int64_t>(action.outgoing->to)
                        : std::nullopt,
                    action.outgoing ? action.outgoing->payload
                                    : std::span<const std::byte>{},
                    action.expected_from, inbox);
    } catch (const std::exception& e) {
      throw std::runtime_error("rank " + std::to_string(rank) + " round " +
                               std::to_string(round) + ": " + e.what());
    }
    state.step_end(action.expected_from ? &inbox : nullptr);

    if (record_trace && (action.outgoing || action.expected_from)) {
      TraceEvent ev;
      ev.round = round;
      ev.rank = rank;
      if (action.outgoing) ev.sent_to = action.outgoing->to;
      ev.received_from = action.expected_from;
      if (action.outgoing) {
        ev.payload_kind = action.outgoing->kind;
      } else {
        ev.payload_kind = (is_exclusive(algo) && round == 0)
                              ? PayloadKind::RawInput
                              : PayloadKind::PartialResult;
      }
      ev.ops_this_round =
          static_cast<std::uint32_t>(state.op_invocations() - inv_before);
      result.trace.push_back(ev);
    }
  }

  if (state.has_result()) result.output = state.result();
  result.metrics = state.metrics();
  return result;
}

}  // namespace scanlab
