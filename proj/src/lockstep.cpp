#include "scanlab/lockstep.hpp"

#include <algorithm>
#include <cstring>
#include <optional>
#include <string>
#include <vector>

#include "scanlab/engine.hpp"
#include "scanlab/schedule.hpp"

namespace scanlab {

namespace {

std::string at(std::int64_t rank, std::uint64_t round) {
  return " (rank " + std::to_string(rank) + ", round " +
         std::to_string(round) + ")";
}

// Expected accumulator after round k: fold of the trailing coverage window,
// recomputed from the raw inputs.
void check_round_invariant(ScanAlgorithm algo, std::uint64_t k,
                           std::span<const ElementVector> inputs,
                           const OperatorSpec& op,
                           std::span<const RankState> states) {
  const std::int64_t p = static_cast<std::int64_t>(inputs.size());
  const std::uint64_t cov = coverage(algo, k);
  for (std::int64_t r = 0; r < p; ++r) {
    std::int64_t lo, hi;
    if (is_exclusive(algo)) {
      if (r == 0) continue;
      hi = r - 1;
      lo = cov > static_cast<std::uint64_t>(r)
               ? 0
               : r - static_cast<std::int64_t>(cov);
    } else {
      hi = r;
      lo = cov > static_cast<std::uint64_t>(r)
               ? 0
               : r + 1 - static_cast<std::int64_t>(cov);
    }
    ElementVector expect = inputs[static_cast<std::size_t>(lo)];
    for (std::int64_t i = lo + 1; i <= hi; ++i) {
      expect = op.apply(expect, inputs[static_cast<std::size_t>(i)]);
    }
    const RankState& st = states[static_cast<std::size_t>(r)];
    if (!st.has_result() || !(st.result() == expect)) {
      throw ProtocolError("coverage invariant violated after round " +
                          std::to_string(k) + at(r, k));
    }
  }
}

}  // namespace

RunReport lockstep_execute(ScanAlgorithm algo, std::int64_t p,
                           std::span<const ElementVector> inputs,
                           const OperatorSpec& op, LockstepOptions opts) {
  if (p < 1 || static_cast<std::size_t>(p) != inputs.size()) {
    throw std::invalid_argument(
        "lockstep_execute: need one input vector per rank");
  }
  for (const auto& v : inputs) {
    if (!v.same_shape(inputs.front())) {
      throw std::invalid_argument("lockstep_execute: input shapes differ");
    }
  }

  std::vector<RankState> states;
  states.reserve(static_cast<std::size_t>(p));
  for (std::int64_t r = 0; r < p; ++r) {
    states.emplace_back(algo, r, p, inputs[static_cast<std::size_t>(r)], op);
  }

  RunReport report;
  report.trace_recorded = opts.record_trace;

  struct Pending {
    std::optional<RoundAction> action;
    std::uint64_t inv_before = 0;
  };
  std::vector<Pending> pending(static_cast<std::size_t>(p));
  // Per-rank delivery slot, reused across rounds.
  std::vector<ElementVector> inbox;
  std::vector<bool> inbox_full(static_cast<std::size_t>(p), false);
  inbox.reserve(static_cast<std::size_t>(p));
  for (std::int64_t r = 0; r < p; ++r) {
    inbox.emplace_back(inputs.front().count(), inputs.front().element_width());
  }

  std::uint64_t round = 0;
  while (true) {
    bool any_active = false;

    // Phase 1: collect actions, route payloads, enforce the one-ported
    // model and partner symmetry.
    std::fill(inbox_full.begin(), inbox_full.end(), false);
    for (auto& pd : pending) pd.action.reset();
    for (std::int64_t r = 0; r < p; ++r) {
      RankState& st = states[static_cast<std::size_t>(r)];
      if (st.done()) continue;
      any_active = true;
      pending[static_cast<std::size_t>(r)].inv_before = st.op_invocations();
      pending[static_cast<std::size_t>(r)].action = st.step_begin();
    }
    if (!any_active) break;

    for (std::int64_t r = 0; r < p; ++r) {
      const auto& action = pending[static_cast<std::size_t>(r)].action;
      if (!action || !action->outgoing) continue;
      const auto& out = *action->outgoing;
      if (out.to == r || out.to < 0 || out.to >= p) {
        throw ProtocolError("message addressed outside the group" +
                            at(r, round));
      }
      const auto& dest_action =
          pending[static_cast<std::size_t>(out.to)].action;
      if (!dest_action) {
        throw ProtocolError("message sent to a finished rank " +
                            std::to_string(out.to) + at(r, round));
      }
      if (!dest_action->expected_from || *dest_action->expected_from != r) {
        throw ProtocolError("partner asymmetry: rank " + std::to_string(r) +
                            " sends to rank " + std::to_string(out.to) +
                            " which does not expect it" + at(out.to, round));
      }
      if (inbox_full[static_cast<std::size_t>(out.to)]) {
        throw ProtocolError("duplicate delivery to rank " +
                            std::to_string(out.to) + at(r, round));
      }
      ElementVector& slot = inbox[static_cast<std::size_t>(out.to)];
      if (out.payload.size() != slot.byte_size()) {
        throw ProtocolError("payload size mismatch" + at(r, round));
      }
      if (!out.payload.empty()) {
        std::memcpy(slot.bytes().data(), out.payload.data(),
                    out.payload.size());
      }
      inbox_full[static_cast<std::size_t>(out.to)] = true;
    }

    // Phase 2: close the round everywhere, then trace and check.
    for (std::int64_t r = 0; r < p; ++r) {
      auto& pd = pending[static_cast<std::size_t>(r)];
      if (!pd.action) continue;
      RankState& st = states[static_cast<std::size_t>(r)];
      if (pd.action->expected_from &&
          !inbox_full[static_cast<std::size_t>(r)]) {
        throw ProtocolError("expected message from rank " +
                            std::to_string(*pd.action->expected_from) +
                            " never arrived" + at(r, round));
      }
      st.step_end(pd.action->expected_from
                      ? &inbox[static_cast<std::size_t>(r)]
                      : nullptr);

      const bool active = pd.action->outgoing || pd.action->expected_from;
      if (active) {
        report.measured_rounds = round + 1;
        if (opts.record_trace) {
          TraceEvent ev;
          ev.round = round;
          ev.rank = r;
          if (pd.action->outgoing) ev.sent_to = pd.action->outgoing->to;
          ev.received_from = pd.action->expected_from;
          ev.payload_kind =
              pd.action->outgoing
                  ? pd.action->outgoing->kind
                  : ((is_exclusive(algo) && round == 0)
                         ? PayloadKind::RawInput
                         : PayloadKind::PartialResult);
          ev.ops_this_round =
              static_cast<std::uint32_t>(st.op_invocations() - pd.inv_before);
          report.trace.push_back(ev);
        }
      }
    }

    if (opts.check_invariants) {
      check_round_invariant(algo, round, inputs, op, states);
    }
    ++round;
  }

  report.outputs.resize(static_cast<std::size_t>(p));
  report.metrics.resize(static_cast<std::size_t>(p));
  for (std::int64_t r = 0; r < p; ++r) {
    RankState& st = states[static_cast<std::size_t>(r)];
    if (st.has_result()) {
      report.outputs[static_cast<std::size_t>(r)] = st.result();
    }
    report.metrics[static_cast<std::size_t>(r)] = st.metrics();
    if (!(st.input() == inputs[static_cast<std::size_t>(r)])) {
      throw ProtocolError("input vector mutated during the run" +
                          at(r, round));
    }
  }
  return report;
}

}  // namespace scanlab
