#include "scanlab/operators.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace scanlab {

namespace {

void check_shapes(const OperatorSpec& op, const ElementVector& a,
                  const ElementVector& b) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument("operator " + op.name +
                                ": operand shapes differ");
  }
  if (a.element_width() != op.element_width) {
    throw std::invalid_argument("operator " + op.name +
                                ": operand element width mismatch");
  }
}

void wrap_sum_elements(const std::byte* l, const std::byte* r, std::byte* out,
                       std::size_t count) {
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t a = load_u64_le({l + i * 8, 8});
    std::uint64_t b = load_u64_le({r + i * 8, 8});
    store_u64_le(a + b, {out + i * 8, 8});
  }
}

void bxor_elements(const std::byte* l, const std::byte* r, std::byte* out,
                   std::size_t count) {
  for (std::size_t i = 0; i < count * 8; ++i) {
    out[i] = l[i] ^ r[i];
  }
}

void max_elements(const std::byte* l, const std::byte* r, std::byte* out,
                  std::size_t count) {
  for (std::size_t i = 0; i < count; ++i) {
    std::int64_t a = load_i64_le({l + i * 8, 8});
    std::int64_t b = load_i64_le({r + i * 8, 8});
    store_i64_le(std::max(a, b), {out + i * 8, 8});
  }
}

constexpr std::size_t kConcatSlot = kConcatSeqCapacity + 1;

void concat_elements(const std::byte* l, const std::byte* r, std::byte* out,
                     std::size_t count) {
  for (std::size_t i = 0; i < count; ++i) {
    const std::byte* le = l + i * kConcatSlot;
    const std::byte* re = r + i * kConcatSlot;
    std::byte* oe = out + i * kConcatSlot;
    const std::size_t ln = static_cast<std::size_t>(le[0]);
    const std::size_t rn = static_cast<std::size_t>(re[0]);
    if (ln > kConcatSeqCapacity || rn > kConcatSeqCapacity ||
        ln + rn > kConcatSeqCapacity) {
      throw std::length_error(
          "concat_seq: combined sequence exceeds slot capacity");
    }
    // out may alias r; stash the right payload before writing.
    std::array<std::byte, kConcatSeqCapacity> tmp;
    std::memcpy(tmp.data(), re + 1, rn);
    oe[0] = static_cast<std::byte>(ln + rn);
    std::memmove(oe + 1, le + 1, ln);
    std::memcpy(oe + 1 + ln, tmp.data(), rn);
    std::memset(oe + 1 + ln + rn, 0, kConcatSeqCapacity - ln - rn);
  }
}

void mat2_elements(const std::byte* l, const std::byte* r, std::byte* out,
                   std::size_t count) {
  constexpr std::uint32_t p = 251;
  for (std::size_t i = 0; i < count; ++i) {
    const std::byte* a = l + i * 4;
    const std::byte* b = r + i * 4;
    std::uint32_t a00 = std::uint32_t(a[0]), a01 = std::uint32_t(a[1]);
    std::uint32_t a10 = std::uint32_t(a[2]), a11 = std::uint32_t(a[3]);
    std::uint32_t b00 = std::uint32_t(b[0]), b01 = std::uint32_t(b[1]);
    std::uint32_t b10 = std::uint32_t(b[2]), b11 = std::uint32_t(b[3]);
    std::array<std::uint32_t, 4> c = {
        (a00 * b00 + a01 * b10) % p, (a00 * b01 + a01 * b11) % p,
        (a10 * b00 + a11 * b10) % p, (a10 * b01 + a11 * b11) % p};
    std::byte* oe = out + i * 4;
    for (std::size_t j = 0; j < 4; ++j) oe[j] = static_cast<std::byte>(c[j]);
  }
}

ElementVector constant_u64_identity(std::size_t count, std::uint64_t value) {
  ElementVector v(count, 8);
  for (std::size_t i = 0; i < count; ++i) store_u64_le(value, v.element(i));
  return v;
}

}  // namespace

ElementVector OperatorSpec::apply(const ElementVector& leftv,
                                  const ElementVector& rightv) const {
  check_shapes(*this, leftv, rightv);
  ElementVector out(leftv.count(), leftv.element_width());
  apply_elements(leftv.bytes().data(), rightv.bytes().data(),
                 out.bytes().data(), leftv.count());
  return out;
}

void OperatorSpec::fold_left_into(const ElementVector& leftv,
                                  ElementVector& acc) const {
  apply_to(leftv, acc, acc);
}

void OperatorSpec::apply_to(const ElementVector& leftv,
                            const ElementVector& rightv,
                            ElementVector& out) const {
  check_shapes(*this, leftv, rightv);
  if (!out.same_shape(rightv)) {
    throw std::invalid_argument("operator " + name +
                                ": output shape mismatch");
  }
  apply_elements(leftv.bytes().data(), rightv.bytes().data(),
                 out.bytes().data(), leftv.count());
}

const std::vector<std::string>& builtin_operator_names() {
  static const std::vector<std::string> names = {
      "wrap_sum_u64", "bxor_u64", "max_i64", "concat_seq", "mat2_mod_p"};
  return names;
}

OperatorSpec builtin_operator(std::string_view name) {
  if (name == "wrap_sum_u64") {
    return OperatorSpec{
        .name = "wrap_sum_u64",
        .element_width = 8,
        .commutative = true,
        .apply_elements = wrap_sum_elements,
        .identity = [](std::size_t n) { return constant_u64_identity(n, 0); }};
  }
  if (name == "bxor_u64") {
    return OperatorSpec{
        .name = "bxor_u64",
        .element_width = 8,
        .commutative = true,
        .apply_elements = bxor_elements,
        .identity = [](std::size_t n) { return constant_u64_identity(n, 0); }};
  }
  if (name == "max_i64") {
    return OperatorSpec{
        .name = "max_i64",
        .element_width = 8,
        .commutative = true,
        .apply_elements = max_elements,
        .identity =
            [](std::size_t n) {
              ElementVector v(n, 8);
              for (std::size_t i = 0; i < n; ++i) {
                store_i64_le(std::numeric_limits<std::int64_t>::min(),
                             v.element(i));
              }
              return v;
            }};
  }
  if (name == "concat_seq") {
    return OperatorSpec{
        .name = "concat_seq",
        .element_width = kConcatSlot,
        .commutative = false,
        .apply_elements = concat_elements,
        // Length-0 slots concatenate as a neutral element.
        .identity = [](std::size_t n) {
          return ElementVector(n, kConcatSlot);
        }};
  }
  if (name == "mat2_mod_p") {
    return OperatorSpec{.name = "mat2_mod_p",
                        .element_width = 4,
                        .commutative = false,
                        .apply_elements = mat2_elements,
                        .identity =
                            [](std::size_t n) {
                              ElementVector v(n, 4);
                              for (std::size_t i = 0; i < n; ++i) {
                                auto e = v.element(i);
                                e[0] = std::byte{1};
                                e[3] = std::byte{1};
                              }
                              return v;
                            }};
  }
  std::ostringstream msg;
  msg << "unknown operator '" << name << "'; valid names:";
  for (const auto& n : builtin_operator_names()) msg << " " << n;
  throw std::invalid_argument(msg.str());
}

}  // namespace scanlab
