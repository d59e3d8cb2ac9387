#pragma once

#include <cstdint>
#include <optional>

#include "scanlab/algorithm.hpp"

namespace scanlab {

/// Communication partners of one rank in one round. `to` is the higher rank
/// this rank sends to, `from` the lower rank it receives from; either may be
/// absent. A rank with neither partner in round k has none in any later
/// round (skips grow monotonically), which is what drives termination.
struct PartnerPair {
  std::optional<std::int64_t> to;
  std::optional<std::int64_t> from;

  friend bool operator==(const PartnerPair&, const PartnerPair&) = default;
};

/// Skip distance s_k for round k:
///   InclusiveDoubling, TwoOpDoubling   2^k
///   OneDoubling                        1, then 2^(k-1) for k >= 1
///   OneTwoThreeDoubling                1, 2, then 3*2^(k-2) for k >= 2
/// Total over all k; values saturate at 2^63, far beyond any valid rank
/// distance (p <= 2^32), so out-of-range partner checks stay correct.
std::uint64_t skip(ScanAlgorithm algo, std::uint64_t k);

/// Width of the trailing input window each rank's accumulator covers after
/// round k completes, before clamping at low ranks. The window ends at the
/// rank itself for InclusiveDoubling and at rank-1 for the exclusive
/// variants. Saturates like skip().
std::uint64_t coverage(ScanAlgorithm algo, std::uint64_t k);

/// Number of communication rounds a p-rank run takes: the smallest K whose
/// post-round coverage reaches every needed input (p inputs inclusive, p-1
/// exclusive). Computed by exact integer comparison, never floating-point
/// logs. Equals ceil(log2 p) for InclusiveDoubling and TwoOpDoubling,
/// 1+ceil(log2(p-1)) for OneDoubling, and ceil(log2(p-1)+log2(4/3)) for
/// OneTwoThreeDoubling. Throws std::invalid_argument for p < 2.
std::uint64_t round_count(ScanAlgorithm algo, std::int64_t p);

/// Partner ranks for (algo, p, rank r, round k). Throws when r is outside
/// [0, p).
///
/// Receives are guarded by a per-round floor on the source rank: 0 while
/// rank 0 still contributes (all rounds of the inclusive and two-op scans,
/// round 0 of OneDoubling, rounds 0-1 of OneTwoThreeDoubling) and 1 once
/// rank 0 has dropped out (it holds no exclusive partial result to forward).
/// Sends mirror the same floor so that partner pairs are always symmetric:
/// r sends to r+s_k exactly when r+s_k expects a message from r.
PartnerPair partners(ScanAlgorithm algo, std::int64_t p, std::int64_t r,
                     std::uint64_t k);

}  // namespace scanlab
