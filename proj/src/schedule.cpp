#include "scanlab/schedule.hpp"

#include <stdexcept>
#include <string>

namespace scanlab {

namespace {

// Saturation cap for skip/coverage values. Any value at or above this is
// larger than every representable rank distance.
constexpr std::uint64_t kSaturated = std::uint64_t{1} << 63;

// value * 2^shift, saturating.
std::uint64_t shl_sat(std::uint64_t value, std::uint64_t shift) {
  if (shift >= 63 || value >= (kSaturated >> shift)) return kSaturated;
  return value << shift;
}

// Source-rank floor for receives in round k: ranks below it no longer carry
// anything forwardable (see partners() doc).
std::int64_t receive_floor(ScanAlgorithm algo, std::uint64_t k) {
  switch (algo) {
    case ScanAlgorithm::InclusiveDoubling:
    case ScanAlgorithm::TwoOpDoubling:
      return 0;
    case ScanAlgorithm::OneDoubling:
      return k == 0 ? 0 : 1;
    case ScanAlgorithm::OneTwoThreeDoubling:
      return k <= 1 ? 0 : 1;
  }
  return 0;
}

}  // namespace

std::uint64_t skip(ScanAlgorithm algo, std::uint64_t k) {
  switch (algo) {
    case ScanAlgorithm::InclusiveDoubling:
    case ScanAlgorithm::TwoOpDoubling:
      return shl_sat(1, k);
    case ScanAlgorithm::OneDoubling:
      return k == 0 ? 1 : shl_sat(1, k - 1);
    case ScanAlgorithm::OneTwoThreeDoubling:
      if (k == 0) return 1;
      if (k == 1) return 2;
      return shl_sat(3, k - 2);
  }
  return 0;
}

std::uint64_t coverage(ScanAlgorithm algo, std::uint64_t k) {
  switch (algo) {
    case ScanAlgorithm::InclusiveDoubling:
      return shl_sat(1, k + 1);
    case ScanAlgorithm::TwoOpDoubling: {
      std::uint64_t c = shl_sat(1, k + 1);
      return c == kSaturated ? c : c - 1;
    }
    case ScanAlgorithm::OneDoubling:
      return k == 0 ? 1 : shl_sat(1, k);
    case ScanAlgorithm::OneTwoThreeDoubling:
      return k == 0 ? 1 : shl_sat(3, k - 1);
  }
  return 0;
}

std::uint64_t round_count(ScanAlgorithm algo, std::int64_t p) {
  if (p < 2) {
    throw std::invalid_argument("round_count: p must be >= 2, got " +
                                std::to_string(p));
  }
  const std::uint64_t target =
      algo == ScanAlgorithm::InclusiveDoubling
          ? static_cast<std::uint64_t>(p)
          : static_cast<std::uint64_t>(p) - 1;
  std::uint64_t rounds = 1;
  while (coverage(algo, rounds - 1) < target) ++rounds;
  return rounds;
}

PartnerPair partners(ScanAlgorithm algo, std::int64_t p, std::int64_t r,
                     std::uint64_t k) {
  if (r < 0 || r >= p) {
    throw std::invalid_argument("partners: rank " + std::to_string(r) +
                                " outside [0, " + std::to_string(p) + ")");
  }
  const std::uint64_t s = skip(algo, k);
  const std::uint64_t floor =
      static_cast<std::uint64_t>(receive_floor(algo, k));
  const std::uint64_t ur = static_cast<std::uint64_t>(r);

  PartnerPair pair;
  // Sender guard mirrors the receiver floor so pairs stay symmetric.
  if (ur >= floor && s < static_cast<std::uint64_t>(p) - ur) {
    pair.to = r + static_cast<std::int64_t>(s);
  }
  if (ur >= s + floor) {
    pair.from = r - static_cast<std::int64_t>(s);
  }
  return pair;
}

}  // namespace scanlab
