#include "scanlab/metrics.hpp"

namespace scanlab {

std::string_view payload_kind_label(PayloadKind k) {
  switch (k) {
    case PayloadKind::RawInput:
      return "raw";
    case PayloadKind::CombinedSend:
      return "combined";
    case PayloadKind::PartialResult:
      return "partial";
  }
  return "?";
}

}  // namespace scanlab
