#pragma once

#include <chrono>
#include <cstdint>
#include <span>
#include <vector>

#include "scanlab/algorithm.hpp"
#include "scanlab/element_vector.hpp"
#include "scanlab/operators.hpp"
#include "scanlab/run_report.hpp"
#include "scanlab/thread_transport.hpp"

namespace scanlab {

struct LocalProcsOptions {
  std::uint16_t base_port = 19000;
  int reps = 1;
  int warmups = 0;
  std::chrono::milliseconds recv_timeout = default_recv_timeout();
  bool record_trace = true;
};

struct LocalProcsResult {
  RunReport report;
  /// rank_rep_seconds[r][i]: rank r's local duration of timed repetition i.
  std::vector<std::vector<double>> rank_rep_seconds;
};

/// Runs the collective as p forked OS processes talking TCP over loopback
/// (rank i on base_port + i) and merges the per-process reports. Child
/// failures surface as exceptions naming the rank. Must be called from a
/// context where forking is safe (no other threads running).
LocalProcsResult run_local_socket_procs(ScanAlgorithm algo, std::int64_t p,
                                        std::span<const ElementVector> inputs,
                                        const OperatorSpec& op,
                                        const LocalProcsOptions& opts = {});

}  // namespace scanlab
