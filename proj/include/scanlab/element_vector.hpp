#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace scanlab {

/// A fixed-shape vector of opaque fixed-width elements. This is the unit of
/// data the scan protocols move around: every payload, accumulator and input
/// in one collective shares the same (count, element_width) shape. The
/// protocol layer never interprets element contents; only an OperatorSpec
/// does.
class ElementVector {
 public:
  ElementVector() = default;

  /// Zero-initialized vector of `count` elements, `element_width` bytes each.
  ElementVector(std::size_t count, std::size_t element_width)
      : count_(count),
        element_width_(element_width),
        bytes_(count * element_width) {}

  static ElementVector from_bytes(std::vector<std::byte> bytes,
                                  std::size_t count,
                                  std::size_t element_width);

  std::size_t count() const { return count_; }
  std::size_t element_width() const { return element_width_; }
  std::size_t byte_size() const { return bytes_.size(); }

  std::span<const std::byte> bytes() const { return bytes_; }
  std::span<std::byte> bytes() { return bytes_; }

  std::span<const std::byte> element(std::size_t i) const {
    return std::span<const std::byte>(bytes_).subspan(i * element_width_,
                                                      element_width_);
  }
  std::span<std::byte> element(std::size_t i) {
    return std::span<std::byte>(bytes_).subspan(i * element_width_,
                                                element_width_);
  }

  bool same_shape(const ElementVector& other) const {
    return count_ == other.count_ && element_width_ == other.element_width_;
  }

  /// Bit-exact equality, shape included.
  friend bool operator==(const ElementVector&, const ElementVector&) = default;

 private:
  std::size_t count_ = 0;
  std::size_t element_width_ = 0;
  std::vector<std::byte> bytes_;
};

// Little-endian fixed-width integer codecs. The builtin operators define
// their element encodings in terms of these, so results are bit-identical
// across hosts.
std::uint64_t load_u64_le(std::span<const std::byte> bytes);
void store_u64_le(std::uint64_t value, std::span<std::byte> out);
std::int64_t load_i64_le(std::span<const std::byte> bytes);
void store_i64_le(std::int64_t value, std::span<std::byte> out);

}  // namespace scanlab
