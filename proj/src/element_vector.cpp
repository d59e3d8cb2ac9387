#include "scanlab/element_vector.hpp"

#include <stdexcept>
#include <utility>

namespace scanlab {

ElementVector ElementVector::from_bytes(std::vector<std::byte> bytes,
                                        std::size_t count,
                                        std::size_t element_width) {
  if (bytes.size() != count * element_width) {
    throw std::invalid_argument(
        "ElementVector::from_bytes: byte length does not equal count * "
        "element_width");
  }
  ElementVector v;
  v.count_ = count;
  v.element_width_ = element_width;
  v.bytes_ = std::move(bytes);
  return v;
}

std::uint64_t load_u64_le(std::span<const std::byte> bytes) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) {
    v = (v << 8) | static_cast<std::uint64_t>(bytes[static_cast<size_t>(i)]);
  }
  return v;
}

void store_u64_le(std::uint64_t value, std::span<std::byte> out) {
  for (std::size_t i = 0; i < 8; ++i) {
    out[i] = static_cast<std::byte>(value & 0xFF);
    value >>= 8;
  }
}

std::int64_t load_i64_le(std::span<const std::byte> bytes) {
  return static_cast<std::int64_t>(load_u64_le(bytes));
}

void store_i64_le(std::int64_t value, std::span<std::byte> out) {
  store_u64_le(static_cast<std::uint64_t>(value), out);
}

}  // namespace scanlab
