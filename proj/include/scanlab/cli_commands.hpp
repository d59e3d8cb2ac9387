#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "scanlab/algorithm.hpp"

namespace scanlab {

enum class VerifyTransport { Sim, Thread, Socket };

struct VerifyOptions {
  std::vector<ScanAlgorithm> algos = {all_scan_algorithms().begin(),
                                      all_scan_algorithms().end()};
  std::int64_t p_min = 2;
  std::int64_t p_max = 16;
  std::vector<std::size_t> ms = {1};
  std::vector<std::string> ops;  // empty = all builtins
  VerifyTransport transport = VerifyTransport::Sim;
  std::uint16_t base_port = 18100;
  std::uint64_t seed = 0;  // 0 = library default
};

struct RoundsOptions {
  std::vector<ScanAlgorithm> algos = {all_scan_algorithms().begin(),
                                      all_scan_algorithms().end()};
  std::int64_t p_min = 2;
  std::int64_t p_max = 64;
};

struct TraceOptions {
  ScanAlgorithm algo = ScanAlgorithm::OneTwoThreeDoubling;
  std::int64_t p = 2;
  bool csv = false;
};

enum class BenchTransport { Thread, Socket };

struct BenchOptions {
  BenchTransport transport = BenchTransport::Thread;
  std::vector<ScanAlgorithm> algos = {all_scan_algorithms().begin(),
                                      all_scan_algorithms().end()};
  std::int64_t p = 8;
  std::vector<std::size_t> ms = {1};
  int reps = 200;
  int warmups = 15;
  std::string op = "wrap_sum_u64";
  std::string out_path;  // empty: CSV to stdout
  std::uint16_t base_port = 18300;
};

// Exit codes across all commands: 0 pass, 1 check/benchmark failure,
// 2 usage error.
int cmd_verify(const VerifyOptions& opts, std::ostream& out,
               std::ostream& err);
int cmd_rounds(const RoundsOptions& opts, std::ostream& out,
               std::ostream& err);
int cmd_trace(const TraceOptions& opts, std::ostream& out, std::ostream& err);
int cmd_bench(const BenchOptions& opts, std::ostream& out, std::ostream& err);

/// Full argv-level entry point (subcommands verify | rounds | trace |
/// bench); what main() calls and what CLI tests drive in-process.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace scanlab
