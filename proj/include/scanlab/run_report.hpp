#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "scanlab/element_vector.hpp"
#include "scanlab/metrics.hpp"

namespace scanlab {

/// Everything a transport reports back from one collective run. When the
/// trace was recorded, measured_rounds equals 1 + the highest round index in
/// it (0 for an empty trace); big sweeps may disable recording, in which
/// case measured_rounds is still tracked from rank activity.
struct RunReport {
  std::vector<std::optional<ElementVector>> outputs;
  std::vector<RankMetrics> metrics;
  std::vector<TraceEvent> trace;  // ordered by (round, rank)
  bool trace_recorded = false;
  std::uint64_t measured_rounds = 0;
};

}  // namespace scanlab
