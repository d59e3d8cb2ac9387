#pragma once

#include <cstdint>
#include <vector>

#include "scanlab/element_vector.hpp"
#include "scanlab/operators.hpp"

namespace scanlab {

inline constexpr std::uint64_t kDefaultInputSeed = 0x5ca91ab5eedULL;

/// Deterministic pseudo-random input vector for one rank, valid for the
/// given operator's element encoding (concat_seq slots hold one random
/// byte; mat2_mod_p entries are reduced mod 251).
ElementVector make_input(const OperatorSpec& op, std::size_t m,
                         std::uint64_t seed);

/// One input per rank, seeded per (base_seed, rank).
std::vector<ElementVector> make_inputs(const OperatorSpec& op, std::int64_t p,
                                       std::size_t m,
                                       std::uint64_t base_seed = kDefaultInputSeed);

}  // namespace scanlab
