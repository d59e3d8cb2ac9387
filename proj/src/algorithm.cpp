#include "scanlab/algorithm.hpp"

namespace scanlab {

std::string_view algorithm_id(ScanAlgorithm a) {
  switch (a) {
    case ScanAlgorithm::InclusiveDoubling:
      return "incl";
    case ScanAlgorithm::TwoOpDoubling:
      return "twoop";
    case ScanAlgorithm::OneDoubling:
      return "shift1";
    case ScanAlgorithm::OneTwoThreeDoubling:
      return "d123";
  }
  return "?";
}

std::optional<ScanAlgorithm> parse_algorithm(std::string_view id) {
  for (ScanAlgorithm a : all_scan_algorithms()) {
    if (id == algorithm_id(a)) return a;
  }
  return std::nullopt;
}

}  // namespace scanlab
