#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "scanlab/element_vector.hpp"

namespace scanlab {

/// An associative binary operator over fixed-width elements, applied
/// element-wise to whole vectors. Operand order is fixed repo-wide: the LEFT
/// operand always carries data originating from lower-ranked processors, so
/// non-commutative operators come out in rank order.
///
/// `apply_elements(left, right, out, count)` combines `count` elements.
/// `out` may alias `right` (the engine folds received data into its
/// accumulator in place); it must never alias `left`.
struct OperatorSpec {
  std::string name;
  std::size_t element_width = 0;
  bool commutative = false;
  std::function<void(const std::byte* left, const std::byte* right,
                     std::byte* out, std::size_t count)>
      apply_elements;
  /// Identity-element factory, null when the operator has none declared.
  /// The protocols never rely on an identity existing.
  std::function<ElementVector(std::size_t count)> identity;

  /// leftv ⊕ rightv into a fresh vector.
  ElementVector apply(const ElementVector& leftv,
                      const ElementVector& rightv) const;

  /// acc := leftv ⊕ acc.
  void fold_left_into(const ElementVector& leftv, ElementVector& acc) const;

  /// out := leftv ⊕ rightv; out must be pre-shaped and may alias rightv.
  void apply_to(const ElementVector& leftv, const ElementVector& rightv,
                ElementVector& out) const;
};

/// Builtin operators: wrap_sum_u64, bxor_u64, max_i64, concat_seq,
/// mat2_mod_p. Unknown names throw std::invalid_argument listing the valid
/// ones.
///
/// Element encodings:
///   wrap_sum_u64  8-byte little-endian u64, addition mod 2^64
///   bxor_u64      8-byte little-endian u64, bitwise xor
///   max_i64       8-byte little-endian two's-complement i64, maximum
///   concat_seq    length-prefixed byte sequence in a fixed 65-byte slot
///                 (1 length byte + up to 64 payload bytes, zero padded);
///                 concatenation, non-commutative
///   mat2_mod_p    2x2 matrix over Z_251, one byte per entry, row-major
///                 [a00 a01 a10 a11]; matrix product mod 251, non-commutative
OperatorSpec builtin_operator(std::string_view name);

const std::vector<std::string>& builtin_operator_names();

/// Maximum payload bytes a concat_seq slot can hold.
inline constexpr std::size_t kConcatSeqCapacity = 64;

}  // namespace scanlab
