#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>

#include "scanlab/algorithm.hpp"
#include "scanlab/element_vector.hpp"
#include "scanlab/operators.hpp"
#include "scanlab/run_report.hpp"

namespace scanlab {

/// A schedule or delivery inconsistency detected by the simulator: partner
/// asymmetry, duplicate sends or receives in a round, a message to a
/// finished rank. Always names the offending rank and round.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LockstepOptions {
  /// After every round, re-derive each rank's accumulator from the raw
  /// inputs over the coverage window and compare bit-exactly.
  bool check_invariants = false;
  /// Trace recording costs memory proportional to total rank-rounds; sweeps
  /// over large p turn it off.
  bool record_trace = true;
};

/// Runs all p ranks round by round in one execution context. Each round is
/// two-phase: collect every rank's action and verify one-portedness and
/// partner symmetry, then deliver all payloads and close the round at every
/// rank. Deterministic: identical inputs give identical reports, traces
/// included.
RunReport lockstep_execute(ScanAlgorithm algo, std::int64_t p,
                           std::span<const ElementVector> inputs,
                           const OperatorSpec& op, LockstepOptions opts = {});

}  // namespace scanlab
