#pragma once

#include <optional>
#include <span>
#include <vector>

#include "scanlab/element_vector.hpp"
#include "scanlab/operators.hpp"

namespace scanlab {

/// Sequential reference scans. Both are naive O(p) left-to-right folds, on
/// purpose: the strict fold order is what lets them catch protocol
/// re-association bugs with non-commutative operators.

/// output[0] is absent; output[r] = inputs[0] ⊕ ... ⊕ inputs[r-1].
std::vector<std::optional<ElementVector>> exclusive_prefix(
    std::span<const ElementVector> inputs, const OperatorSpec& op);

/// output[r] = inputs[0] ⊕ ... ⊕ inputs[r].
std::vector<ElementVector> inclusive_prefix(
    std::span<const ElementVector> inputs, const OperatorSpec& op);

}  // namespace scanlab
