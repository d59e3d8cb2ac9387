#include <doctest.h>

#include <stdexcept>

#include "scanlab/input_gen.hpp"
#include "scanlab/lockstep.hpp"
#include "scanlab/oracle.hpp"
#include "scanlab/schedule.hpp"

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

std::vector<ElementVector> u64_inputs(std::initializer_list<std::uint64_t> xs) {
  std::vector<ElementVector> in;
  for (auto x : xs) in.push_back(u64_scalar(x));
  return in;
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

bool matches_oracle(ScanAlgorithm algo, std::span<const ElementVector> inputs,
                    const OperatorSpec& op, const RunReport& report) {
  if (is_exclusive(algo)) {
    const auto want = exclusive_prefix(inputs, op);
    return std::equal(want.begin(), want.end(), report.outputs.begin(),
                      report.outputs.end());
  }
  const auto want = inclusive_prefix(inputs, op);
  if (want.size() != report.outputs.size()) return false;
  for (std::size_t r = 0; r < want.size(); ++r) {
    if (!report.outputs[r] || !(*report.outputs[r] == want[r])) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE("lockstep") {

TEST_CASE("d123 p=4 wrap_sum spot run") {
  const auto op = builtin_operator("wrap_sum_u64");
  const auto in = u64_inputs({1, 2, 3, 4});
  const RunReport report =
      lockstep_execute(ScanAlgorithm::OneTwoThreeDoubling, 4, in, op);
  REQUIRE(report.outputs.size() == 4);
  CHECK_FALSE(report.outputs[0].has_value());
  CHECK(u64_of(*report.outputs[1]) == 1);
  CHECK(u64_of(*report.outputs[2]) == 3);
  CHECK(u64_of(*report.outputs[3]) == 6);
  CHECK(report.measured_rounds == 2);
  std::uint64_t max_ops = 0;
  for (const auto& m : report.metrics) {
    max_ops = std::max(max_ops, m.op_applications);
  }
  CHECK(max_ops == 1);  // q-1 with q=2
}

TEST_CASE("d123 p=4 golden trace") {
  const auto op = builtin_operator("wrap_sum_u64");
  const auto in = u64_inputs({1, 2, 3, 4});
  const RunReport report =
      lockstep_execute(ScanAlgorithm::OneTwoThreeDoubling, 4, in, op);
  REQUIRE(report.trace_recorded);

  const std::vector<TraceEvent> want = {
      {0, 0, 1, std::nullopt, PayloadKind::RawInput, 0},
      {0, 1, 2, 0, PayloadKind::RawInput, 0},
      {0, 2, 3, 1, PayloadKind::RawInput, 0},
      {0, 3, std::nullopt, 2, PayloadKind::RawInput, 0},
      {1, 0, 2, std::nullopt, PayloadKind::RawInput, 0},
      {1, 1, 3, std::nullopt, PayloadKind::CombinedSend, 1},
      {1, 2, std::nullopt, 0, PayloadKind::PartialResult, 1},
      {1, 3, std::nullopt, 1, PayloadKind::PartialResult, 1},
  };
  REQUIRE(report.trace.size() == want.size());
  for (std::size_t i = 0; i < want.size(); ++i) {
    CAPTURE(i);
    CHECK(report.trace[i] == want[i]);
  }
}

TEST_CASE("d123 p=5 concat reaches abcd at the last rank") {
  const auto op = builtin_operator("concat_seq");
  const std::vector<ElementVector> in = {seq1('a'), seq1('b'), seq1('c'),
                                         seq1('d'), seq1('e')};
  const RunReport report =
      lockstep_execute(ScanAlgorithm::OneTwoThreeDoubling, 5, in, op);
  REQUIRE(report.outputs[4].has_value());
  CHECK(seq_str(*report.outputs[4]) == "abcd");
  CHECK(seq_str(*report.outputs[1]) == "a");
  CHECK(seq_str(*report.outputs[2]) == "ab");
  CHECK(seq_str(*report.outputs[3]) == "abc");
  CHECK(report.measured_rounds == 3);
}

TEST_CASE("two-op doubling p=4 finishes in ceil(log2 p) rounds") {
  const auto op = builtin_operator("wrap_sum_u64");
  const auto in = u64_inputs({1, 2, 3, 4});
  const RunReport report =
      lockstep_execute(ScanAlgorithm::TwoOpDoubling, 4, in, op);
  CHECK_FALSE(report.outputs[0].has_value());
  CHECK(u64_of(*report.outputs[1]) == 1);
  CHECK(u64_of(*report.outputs[2]) == 3);
  CHECK(u64_of(*report.outputs[3]) == 6);
  CHECK(report.measured_rounds == 2);
}

TEST_CASE("p=2 exclusive variants take exactly one shift round") {
  const auto op = builtin_operator("wrap_sum_u64");
  const auto in = u64_inputs({5, 6});
  for (ScanAlgorithm algo :
       {ScanAlgorithm::TwoOpDoubling, ScanAlgorithm::OneDoubling,
        ScanAlgorithm::OneTwoThreeDoubling}) {
    CAPTURE(algorithm_id(algo));
    const RunReport report = lockstep_execute(algo, 2, in, op);
    CHECK(report.measured_rounds == 1);
    CHECK_FALSE(report.outputs[0].has_value());
    CHECK(u64_of(*report.outputs[1]) == 5);
    CHECK(report.metrics[1].op_applications == 0);
  }
}

TEST_CASE("inclusive p=2 single round") {
  const auto op = builtin_operator("wrap_sum_u64");
  const auto in = u64_inputs({5, 6});
  const RunReport report =
      lockstep_execute(ScanAlgorithm::InclusiveDoubling, 2, in, op);
  CHECK(report.measured_rounds == 1);
  CHECK(u64_of(*report.outputs[0]) == 5);
  CHECK(u64_of(*report.outputs[1]) == 11);
}

TEST_CASE("measured rounds match the formula at p=36") {
  const auto op = builtin_operator("wrap_sum_u64");
  const auto in = make_inputs(op, 36, 1);
  CHECK(lockstep_execute(ScanAlgorithm::OneTwoThreeDoubling, 36, in, op)
            .measured_rounds == 6);
  CHECK(lockstep_execute(ScanAlgorithm::OneDoubling, 36, in, op)
            .measured_rounds == 7);
}

TEST_CASE("p=1 runs produce no communication and oracle outputs") {
  const auto op = builtin_operator("wrap_sum_u64");
  const auto in = u64_inputs({9});
  for (ScanAlgorithm algo : all_scan_algorithms()) {
    CAPTURE(algorithm_id(algo));
    const RunReport report = lockstep_execute(algo, 1, in, op);
    CHECK(report.measured_rounds == 0);
    CHECK(report.trace.empty());
    if (is_exclusive(algo)) {
      CHECK_FALSE(report.outputs[0].has_value());
    } else {
      CHECK(u64_of(*report.outputs[0]) == 9);
    }
  }
}

TEST_CASE("oracle equivalence sweep with invariant checking") {
  for (const char* op_name : {"wrap_sum_u64", "concat_seq"}) {
    const auto op = builtin_operator(op_name);
    for (ScanAlgorithm algo : all_scan_algorithms()) {
      for (std::int64_t p = 1; p <= 40; ++p) {
        CAPTURE(op_name);
        CAPTURE(algorithm_id(algo));
        CAPTURE(p);
        const auto in = make_inputs(op, p, 2);
        LockstepOptions opts;
        opts.check_invariants = true;
        const RunReport report = lockstep_execute(algo, p, in, op, opts);
        REQUIRE(matches_oracle(algo, in, op, report));
      }
    }
  }
}

TEST_CASE("per-rank operator applications respect the bounds") {
  const auto op = builtin_operator("wrap_sum_u64");
  for (ScanAlgorithm algo : all_scan_algorithms()) {
    for (std::int64_t p = 2; p <= 130; ++p) {
      CAPTURE(algorithm_id(algo));
      CAPTURE(p);
      const auto in = make_inputs(op, p, 1);
      LockstepOptions opts;
      opts.record_trace = false;
      const RunReport report = lockstep_execute(algo, p, in, op, opts);
      const std::uint64_t q = round_count(algo, p);
      std::uint64_t bound = 0;
      switch (algo) {
        case ScanAlgorithm::InclusiveDoubling:
          bound = q;
          break;
        case ScanAlgorithm::TwoOpDoubling:
          bound = 2 * q - 1;
          break;
        case ScanAlgorithm::OneDoubling:
          bound = q - 1;
          break;
        case ScanAlgorithm::OneTwoThreeDoubling:
          bound = q - 1;
          break;
      }
      REQUIRE(report.measured_rounds == q);
      for (const auto& m : report.metrics) {
        REQUIRE(m.op_applications <= bound);
      }
    }
  }
}

TEST_CASE("lockstep runs are deterministic, trace included") {
  const auto op = builtin_operator("bxor_u64");
  const auto in = make_inputs(op, 13, 3);
  const auto a = lockstep_execute(ScanAlgorithm::OneTwoThreeDoubling, 13, in, op);
  const auto b = lockstep_execute(ScanAlgorithm::OneTwoThreeDoubling, 13, in, op);
  CHECK(a.trace == b.trace);
  CHECK(a.measured_rounds == b.measured_rounds);
  REQUIRE(a.outputs.size() == b.outputs.size());
  for (std::size_t r = 0; r < a.outputs.size(); ++r) {
    CHECK(a.outputs[r] == b.outputs[r]);
    CHECK(a.metrics[r] == b.metrics[r]);
  }
}

TEST_CASE("trace events respect the one-ported model") {
  const auto op = builtin_operator("wrap_sum_u64");
  for (ScanAlgorithm algo : all_scan_algorithms()) {
    const auto in = make_inputs(op, 23, 1);
    const RunReport report = lockstep_execute(algo, 23, in, op);
    for (const auto& ev : report.trace) {
      if (ev.sent_to) CHECK(*ev.sent_to != ev.rank);
      if (ev.received_from) CHECK(*ev.received_from != ev.rank);
      CHECK(ev.ops_this_round <= 2);
    }
    // At most one event per (round, rank): events are unique and sorted.
    for (std::size_t i = 1; i < report.trace.size(); ++i) {
      const auto& prev = report.trace[i - 1];
      const auto& cur = report.trace[i];
      CHECK((prev.round < cur.round ||
             (prev.round == cur.round && prev.rank < cur.rank)));
    }
    // Trace-derived measured rounds agree with the tracked value.
    std::uint64_t max_round = 0;
    for (const auto& ev : report.trace) {
      max_round = std::max(max_round, ev.round + 1);
    }
    CHECK(max_round == report.measured_rounds);
  }
}

TEST_CASE("metrics bookkeeping is consistent") {
  const auto op = builtin_operator("wrap_sum_u64");
  const auto in = make_inputs(op, 19, 4);
  const RunReport report =
      lockstep_execute(ScanAlgorithm::OneTwoThreeDoubling, 19, in, op);
  for (const auto& m : report.metrics) {
    CHECK(m.bytes_sent == m.messages_sent * 4 * 8);
    CHECK(m.rounds_active <= report.measured_rounds);
  }
  // Conservation: every sent message is received by someone.
  std::uint64_t sent = 0, received = 0;
  for (const auto& m : report.metrics) {
    sent += m.messages_sent;
    received += m.messages_received;
  }
  CHECK(sent == received);
}

TEST_CASE("m=0 payloads still run the full protocol") {
  const auto op = builtin_operator("wrap_sum_u64");
  std::vector<ElementVector> in(8, ElementVector(0, 8));
  const RunReport report =
      lockstep_execute(ScanAlgorithm::OneTwoThreeDoubling, 8, in, op);
  CHECK(report.measured_rounds ==
        round_count(ScanAlgorithm::OneTwoThreeDoubling, 8));
  for (std::size_t r = 1; r < 8; ++r) {
    REQUIRE(report.outputs[r].has_value());
    CHECK(report.outputs[r]->count() == 0);
  }
  CHECK(report.metrics[1].messages_sent > 0);
  CHECK(report.metrics[1].bytes_sent == 0);
}

TEST_CASE("mismatched input shapes are rejected") {
  const auto op = builtin_operator("wrap_sum_u64");
  std::vector<ElementVector> in = {u64_scalar(1), ElementVector(2, 8)};
  CHECK_THROWS_AS(
      lockstep_execute(ScanAlgorithm::OneTwoThreeDoubling, 2, in, op),
      std::invalid_argument);
}

}  // TEST_SUITE
