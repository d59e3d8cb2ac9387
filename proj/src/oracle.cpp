#include "scanlab/oracle.hpp"

#include <stdexcept>

namespace scanlab {

namespace {

void check_uniform(std::span<const ElementVector> inputs,
                   const OperatorSpec& op) {
  if (inputs.empty()) {
    throw std::invalid_argument("prefix oracle: need at least one input");
  }
  for (const auto& v : inputs) {
    if (!v.same_shape(inputs.front())) {
      throw std::invalid_argument("prefix oracle: input shapes differ");
    }
    if (v.element_width() != op.element_width) {
      throw std::invalid_argument(
          "prefix oracle: input width does not match operator");
    }
  }
}

}  // namespace

std::vector<std::optional<ElementVector>> exclusive_prefix(
    std::span<const ElementVector> inputs, const OperatorSpec& op) {
  check_uniform(inputs, op);
  std::vector<std::optional<ElementVector>> out(inputs.size());
  if (inputs.size() == 1) return out;
  ElementVector acc = inputs[0];
  out[1] = acc;
  for (std::size_t r = 2; r < inputs.size(); ++r) {
    acc = op.apply(acc, inputs[r - 1]);
    out[r] = acc;
  }
  return out;
}

std::vector<ElementVector> inclusive_prefix(
    std::span<const ElementVector> inputs, const OperatorSpec& op) {
  check_uniform(inputs, op);
  std::vector<ElementVector> out;
  out.reserve(inputs.size());
  ElementVector acc = inputs[0];
  out.push_back(acc);
  for (std::size_t r = 1; r < inputs.size(); ++r) {
    acc = op.apply(acc, inputs[r]);
    out.push_back(acc);
  }
  return out;
}

}  // namespace scanlab
