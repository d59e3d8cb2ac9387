#include "scanlab/input_gen.hpp"

namespace scanlab {

namespace {

// splitmix64; fixed algorithm so generated inputs are stable across hosts.
std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

ElementVector make_input(const OperatorSpec& op, std::size_t m,
                         std::uint64_t seed) {
  ElementVector v(m, op.element_width);
  for (std::size_t i = 0; i < m; ++i) {
    const std::uint64_t r = mix(seed ^ mix(i));
    auto e = v.element(i);
    if (op.name == "concat_seq") {
      e[0] = std::byte{1};
      e[1] = static_cast<std::byte>(r & 0xFF);
    } else if (op.name == "mat2_mod_p") {
      for (std::size_t j = 0; j < 4; ++j) {
        e[j] = static_cast<std::byte>(((r >> (8 * j)) & 0xFF) % 251);
      }
    } else {
      store_u64_le(r, e);
    }
  }
  return v;
}

std::vector<ElementVector> make_inputs(const OperatorSpec& op, std::int64_t p,
                                       std::size_t m, std::uint64_t base_seed) {
  std::vector<ElementVector> inputs;
  inputs.reserve(static_cast<std::size_t>(p));
  for (std::int64_t r = 0; r < p; ++r) {
    inputs.push_back(
        make_input(op, m, mix(base_seed + static_cast<std::uint64_t>(r))));
  }
  return inputs;
}

}  // namespace scanlab
