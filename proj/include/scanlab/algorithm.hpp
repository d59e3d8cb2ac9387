#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace scanlab {

/// The four scan protocols the engine speaks. Three compute the exclusive
/// prefix (undefined at rank 0); InclusiveDoubling computes the inclusive
/// prefix at every rank.
enum class ScanAlgorithm {
  InclusiveDoubling,    // straight doubling inclusive scan, skips 2^k
  TwoOpDoubling,        // exclusive scan paying up to two ops per round
  OneDoubling,          // shift then doubling exclusive scan
  OneTwoThreeDoubling,  // exclusive scan with skips 1, 2, 3*2^(k-2)
};

inline constexpr std::array<ScanAlgorithm, 4> kAllScanAlgorithms = {
    ScanAlgorithm::InclusiveDoubling, ScanAlgorithm::TwoOpDoubling,
    ScanAlgorithm::OneDoubling, ScanAlgorithm::OneTwoThreeDoubling};

constexpr const std::array<ScanAlgorithm, 4>& all_scan_algorithms() {
  return kAllScanAlgorithms;
}

constexpr bool is_exclusive(ScanAlgorithm a) {
  return a != ScanAlgorithm::InclusiveDoubling;
}

/// Stable short identifier used in CLI flags and CSV output.
std::string_view algorithm_id(ScanAlgorithm a);

/// Parses an algorithm id ("incl", "twoop", "shift1", "d123"); nullopt when
/// unknown.
std::optional<ScanAlgorithm> parse_algorithm(std::string_view id);

}  // namespace scanlab
