#include <doctest.h>

#include <stdexcept>

#include "scanlab/engine.hpp"
#include "scanlab/input_gen.hpp"
#include "scanlab/oracle.hpp"

using namespace scanlab;

namespace {

ElementVector u64_scalar(std::uint64_t x) {
  ElementVector v(1, 8);
  store_u64_le(x, v.element(0));
  return v;
}

std::uint64_t u64_of(const ElementVector& v) {
  return load_u64_le(v.element(0));
}

ElementVector seq1(char c) {
  ElementVector v(1, kConcatSeqCapacity + 1);
  auto e = v.element(0);
  e[0] = std::byte{1};
  e[1] = static_cast<std::byte>(c);
  return v;
}

std::string seq_str(const ElementVector& v) {
  auto e = v.element(0);
  std::string s;
  for (std::size_t i = 0; i < static_cast<std::size_t>(e[0]); ++i) {
    s += static_cast<char>(e[i + 1]);
  }
  return s;
}

struct NullCommunicator final : Communicator {
  std::int64_t rank_, size_;
  NullCommunicator(std::int64_t r, std::int64_t p) : rank_(r), size_(p) {}
  std::int64_t rank() const override { return rank_; }
  std::int64_t size() const override { return size_; }
  void exchange(std::uint64_t, std::optional<std::int64_t>,
                std::span<const std::byte>, std::optional<std::int64_t>,
                ElementVector&) override {
    throw std::logic_error("no communication expected");
  }
};

}  // namespace

TEST_SUITE("engine") {

TEST_CASE("d123 rank 1 round 1 sends the combined payload") {
  // p=4: after round 0, rank 1 holds input 0. Round 1 has a send to rank 3
  // and no receive; the payload is acc ⊕ own input with one counted op.
  const auto op = builtin_operator("wrap_sum_u64");
  RankState st(ScanAlgorithm::OneTwoThreeDoubling, 1, 4, u64_scalar(20), op);

  RoundAction a0 = st.step_begin();
  REQUIRE(a0.outgoing.has_value());
  CHECK(a0.outgoing->to == 2);
  CHECK(a0.outgoing->kind == PayloadKind::RawInput);
  REQUIRE(a0.expected_from.has_value());
  CHECK(*a0.expected_from == 0);
  const ElementVector v0 = u64_scalar(10);
  st.step_end(&v0);
  CHECK(st.metrics().op_applications == 0);  // round-0 receive is a copy

  RoundAction a1 = st.step_begin();
  REQUIRE(a1.outgoing.has_value());
  CHECK(a1.outgoing->to == 3);
  CHECK(a1.outgoing->kind == PayloadKind::CombinedSend);
  CHECK_FALSE(a1.expected_from.has_value());
  CHECK(load_u64_le(a1.outgoing->payload.subspan(0, 8)) == 30);  // 10 ⊕ 20
  // The combine is an invocation but not part of this rank's result chain.
  CHECK(st.op_invocations() == 1);
  CHECK(st.metrics().op_applications == 0);
  // The accumulator itself stays the exclusive prefix, never polluted by
  // the rank's own input.
  CHECK(u64_of(st.result()) == 10);
  st.step_end(nullptr);
  CHECK(st.done());
}

TEST_CASE("d123 rank 0 sends raw input in rounds 0 and 1, then is done") {
  const auto op = builtin_operator("wrap_sum_u64");
  RankState st(ScanAlgorithm::OneTwoThreeDoubling, 0, 4, u64_scalar(7), op);

  RoundAction a0 = st.step_begin();
  REQUIRE(a0.outgoing.has_value());
  CHECK(a0.outgoing->to == 1);
  CHECK(a0.outgoing->kind == PayloadKind::RawInput);
  CHECK_FALSE(a0.expected_from.has_value());
  st.step_end(nullptr);
  CHECK_FALSE(st.done());

  RoundAction a1 = st.step_begin();
  REQUIRE(a1.outgoing.has_value());
  CHECK(a1.outgoing->to == 2);
  CHECK(a1.outgoing->kind == PayloadKind::RawInput);
  CHECK(load_u64_le(a1.outgoing->payload.subspan(0, 8)) == 7);
  st.step_end(nullptr);
  CHECK(st.done());
  CHECK_FALSE(st.has_result());
  CHECK(st.metrics().op_applications == 0);
}

TEST_CASE("d123 rank 3 round 1 merge completes the prefix") {
  const auto op = builtin_operator("wrap_sum_u64");
  RankState st(ScanAlgorithm::OneTwoThreeDoubling, 3, 4, u64_scalar(40), op);

  RoundAction a0 = st.step_begin();
  CHECK_FALSE(a0.outgoing.has_value());
  REQUIRE(a0.expected_from.has_value());
  CHECK(*a0.expected_from == 2);
  const ElementVector v2 = u64_scalar(30);
  st.step_end(&v2);
  CHECK(u64_of(st.result()) == 30);

  RoundAction a1 = st.step_begin();
  CHECK_FALSE(a1.outgoing.has_value());
  REQUIRE(a1.expected_from.has_value());
  CHECK(*a1.expected_from == 1);
  const ElementVector combined = u64_scalar(10 + 20);
  st.step_end(&combined);
  CHECK(st.done());
  CHECK(u64_of(st.result()) == 60);
  CHECK(st.metrics().op_applications == 1);
}

TEST_CASE("inclusive doubling initializes the accumulator from the input") {
  const auto op = builtin_operator("wrap_sum_u64");
  RankState st(ScanAlgorithm::InclusiveDoubling, 0, 4, u64_scalar(5), op);
  CHECK(st.has_result());
  CHECK(u64_of(st.result()) == 5);
  RoundAction a0 = st.step_begin();
  REQUIRE(a0.outgoing.has_value());
  CHECK(a0.outgoing->to == 1);
  CHECK(a0.outgoing->kind == PayloadKind::PartialResult);
  CHECK_FALSE(a0.expected_from.has_value());
}

TEST_CASE("merge keeps incoming data on the left") {
  const auto op = builtin_operator("concat_seq");
  RankState st(ScanAlgorithm::OneDoubling, 2, 3, seq1('x'), op);
  // Round 0: shift; receive "c" as the initial accumulator.
  st.step_begin();
  const ElementVector c = seq1('c');
  st.step_end(&c);
  CHECK(seq_str(st.result()) == "c");
  // Round 1: merge "ab" from below; result must be "abc", never "cab".
  RoundAction a1 = st.step_begin();
  REQUIRE(a1.expected_from.has_value());
  ElementVector ab(1, kConcatSeqCapacity + 1);
  {
    auto e = ab.element(0);
    e[0] = std::byte{2};
    e[1] = std::byte{'a'};
    e[2] = std::byte{'b'};
  }
  st.step_end(&ab);
  CHECK(seq_str(st.result()) == "abc");
}

TEST_CASE("exclusive round 0 receive is a copy with zero ops") {
  const auto op = builtin_operator("wrap_sum_u64");
  for (ScanAlgorithm algo :
       {ScanAlgorithm::TwoOpDoubling, ScanAlgorithm::OneDoubling,
        ScanAlgorithm::OneTwoThreeDoubling}) {
    CAPTURE(algorithm_id(algo));
    RankState st(algo, 1, 2, u64_scalar(9), op);
    st.step_begin();
    const ElementVector v0 = u64_scalar(4);
    st.step_end(&v0);
    CHECK(u64_of(st.result()) == 4);
    CHECK(st.metrics().op_applications == 0);
    CHECK(st.done());  // p=2: a single shift round completes the scan
  }
}

TEST_CASE("step misuse and shape errors are loud") {
  const auto op = builtin_operator("wrap_sum_u64");
  RankState st(ScanAlgorithm::OneTwoThreeDoubling, 1, 4, u64_scalar(1), op);
  CHECK_THROWS_AS(st.step_end(nullptr), std::logic_error);  // no round open
  st.step_begin();
  CHECK_THROWS_AS(st.step_begin(), std::logic_error);  // round already open
  CHECK_THROWS_AS(st.step_end(nullptr), std::logic_error);  // expected a message
  const ElementVector wrong(2, 8);
  CHECK_THROWS_AS(st.step_end(&wrong), std::invalid_argument);
  const ElementVector ok = u64_scalar(2);
  st.step_end(&ok);

  RankState done_state(ScanAlgorithm::OneTwoThreeDoubling, 0, 1,
                       u64_scalar(1), op);
  CHECK(done_state.done());
  CHECK_THROWS_AS(done_state.step_begin(), std::logic_error);
}

TEST_CASE("input is preserved through a full rank run") {
  const auto op = builtin_operator("mat2_mod_p");
  const auto input = make_input(op, 4, 99);
  RankState st(ScanAlgorithm::TwoOpDoubling, 1, 4, input, op);
  while (!st.done()) {
    RoundAction a = st.step_begin();
    ElementVector incoming = make_input(op, 4, st.round() + 1000);
    st.step_end(a.expected_from ? &incoming : nullptr);
  }
  CHECK(st.input() == input);
}

TEST_CASE("run_rank handles p=1 without communication") {
  const auto op = builtin_operator("wrap_sum_u64");
  NullCommunicator comm(0, 1);
  const auto excl = run_rank(ScanAlgorithm::OneTwoThreeDoubling, 0, 1,
                             u64_scalar(11), op, comm);
  CHECK_FALSE(excl.output.has_value());
  CHECK(excl.metrics.messages_sent == 0);
  CHECK(excl.metrics.rounds_active == 0);

  const auto incl =
      run_rank(ScanAlgorithm::InclusiveDoubling, 0, 1, u64_scalar(11), op,
               comm);
  REQUIRE(incl.output.has_value());
  CHECK(u64_of(*incl.output) == 11);
}

}  // TEST_SUITE
