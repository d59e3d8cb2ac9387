#include <doctest.h>

#include <stdexcept>

#include <sstream>

#include "scanlab/input_gen.hpp"
#include "scanlab/local_procs.hpp"
#include "scanlab/lockstep.hpp"
#include "scanlab/oracle.hpp"
#include "scanlab/socket_transport.hpp"

using namespace scanlab;

TEST_SUITE("socket_transport") {

TEST_CASE("frame header encodes to the exact wire bytes") {
  const auto h = encode_frame_header(/*round=*/2, /*source=*/5,
                                     /*payload_len=*/8);
  const unsigned char want[kFrameHeaderSize] = {
      0x58, 0x53, 0x43, 0x4E,  // "XSCN"
      0x01,                    // version
      0x02, 0x00, 0x00, 0x00,  // round
      0x05, 0x00, 0x00, 0x00,  // source
      0x08, 0x00, 0x00, 0x00,  // payload length
  };
  for (std::size_t i = 0; i < kFrameHeaderSize; ++i) {
    CAPTURE(i);
    CHECK(static_cast<unsigned char>(h[i]) == want[i]);
  }
  const FrameHeader back = decode_frame_header(h);
  CHECK(back.round == 2);
  CHECK(back.source == 5);
  CHECK(back.payload_len == 8);
}

TEST_CASE("frame corruption is detected") {
  auto h = encode_frame_header(1, 2, 3);
  h[0] = std::byte{'Y'};
  CHECK_THROWS_WITH_AS(decode_frame_header(h), doctest::Contains("magic"),
                       std::runtime_error);

  auto v = encode_frame_header(1, 2, 3);
  v[4] = std::byte{9};
  CHECK_THROWS_WITH_AS(decode_frame_header(v), doctest::Contains("version"),
                       std::runtime_error);
}

TEST_CASE("peer table parsing") {
  std::istringstream good("1 hostb 9001\n0 hosta 9000\n2 hostc 9002\n");
  const auto peers = parse_peer_table(good, 3);
  REQUIRE(peers.size() == 3);
  CHECK(peers[0].host == "hosta");
  CHECK(peers[0].port == 9000);
  CHECK(peers[2].host == "hostc");
  CHECK(peers[2].port == 9002);

  std::istringstream missing("0 hosta 9000\n");
  CHECK_THROWS_WITH_AS(parse_peer_table(missing, 2),
                       doctest::Contains("missing rank"),
                       std::invalid_argument);

  std::istringstream dup("0 a 1\n0 b 2\n");
  CHECK_THROWS_WITH_AS(parse_peer_table(dup, 2),
                       doctest::Contains("duplicate"), std::invalid_argument);

  std::istringstream bad("zero a b\n");
  CHECK_THROWS_AS(parse_peer_table(bad, 1), std::invalid_argument);
}

TEST_CASE("local peer table maps rank i to base_port + i") {
  const auto peers = local_peer_table(3, 40000);
  CHECK(peers[0].port == 40000);
  CHECK(peers[2].port == 40002);
  CHECK(peers[1].host == "127.0.0.1");
}

TEST_CASE("p=1 socket run opens no sockets and yields no exclusive output") {
  const auto op = builtin_operator("wrap_sum_u64");
  SocketRunConfig config;
  config.rank = 0;
  config.p = 1;
  config.peers = local_peer_table(1, 1);  // port irrelevant, never bound
  config.algo = ScanAlgorithm::OneTwoThreeDoubling;
  const auto res = socket_execute(config, make_input(op, 1, 3), op);
  CHECK_FALSE(res.output.has_value());
  CHECK(res.metrics.messages_sent == 0);
}

TEST_CASE("four local processes match the oracle at m=1000") {
  const auto op = builtin_operator("wrap_sum_u64");
  const auto in = make_inputs(op, 4, 1000);
  LocalProcsOptions opts;
  opts.base_port = 20110;
  const auto res = run_local_socket_procs(
      ScanAlgorithm::OneTwoThreeDoubling, 4, in, op, opts);
  const auto want = exclusive_prefix(in, op);
  REQUIRE(res.report.outputs.size() == 4);
  for (std::size_t r = 0; r < 4; ++r) {
    CAPTURE(r);
    CHECK(res.report.outputs[r] == want[r]);
  }
  CHECK(res.report.measured_rounds == 2);
}

TEST_CASE("socket trace matches the lock-step trace") {
  const auto op = builtin_operator("wrap_sum_u64");
  const auto in = make_inputs(op, 6, 2);
  LocalProcsOptions opts;
  opts.base_port = 20130;
  const auto socket_res =
      run_local_socket_procs(ScanAlgorithm::TwoOpDoubling, 6, in, op, opts);
  const auto sim = lockstep_execute(ScanAlgorithm::TwoOpDoubling, 6, in, op);
  CHECK(socket_res.report.trace == sim.trace);
}

TEST_CASE("benchmark repetitions reuse the mesh and stay consistent") {
  const auto op = builtin_operator("bxor_u64");
  const auto in = make_inputs(op, 3, 10);
  LocalProcsOptions opts;
  opts.base_port = 20140;
  opts.reps = 5;
  opts.warmups = 2;
  const auto res =
      run_local_socket_procs(ScanAlgorithm::OneDoubling, 3, in, op, opts);
  const auto want = exclusive_prefix(in, op);
  for (std::size_t r = 0; r < 3; ++r) {
    CHECK(res.report.outputs[r] == want[r]);
    CHECK(res.rank_rep_seconds[r].size() == 5);
    for (double s : res.rank_rep_seconds[r]) CHECK(s > 0.0);
  }
}

}  // TEST_SUITE
