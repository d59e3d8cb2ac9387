#include "scanlab/cli_commands.hpp"

#include <algorithm>
#include <atomic>
#include <barrier>
#include <bit>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "scanlab/engine.hpp"
#include "scanlab/input_gen.hpp"
#include "scanlab/local_procs.hpp"
#include "scanlab/lockstep.hpp"
#include "scanlab/oracle.hpp"
#include "scanlab/schedule.hpp"
#include "scanlab/thread_transport.hpp"

namespace scanlab {

namespace {

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::uint64_t ceil_log2(std::uint64_t x) {
  return x <= 1 ? 0 : static_cast<std::uint64_t>(std::bit_width(x - 1));
}

std::uint64_t ops_bound(ScanAlgorithm algo, std::int64_t p) {
  const auto up = static_cast<std::uint64_t>(p);
  switch (algo) {
    case ScanAlgorithm::InclusiveDoubling:
      return ceil_log2(up);
    case ScanAlgorithm::TwoOpDoubling:
      return 2 * ceil_log2(up) - 1;
    case ScanAlgorithm::OneDoubling:
      return ceil_log2(up - 1);
    case ScanAlgorithm::OneTwoThreeDoubling:
      return round_count(algo, p) - 1;
  }
  return 0;
}

std::string hex_bytes(std::span<const std::byte> bytes) {
  static const char digits[] = "0123456789abcdef";
  std::string s = "0x";
  if (bytes.empty()) s += "(empty)";
  for (std::byte b : bytes) {
    s += digits[static_cast<unsigned>(b) >> 4];
    s += digits[static_cast<unsigned>(b) & 0xF];
  }
  return s;
}

struct Mismatch {
  std::int64_t rank = 0;
  std::size_t element = 0;
  std::string expected;
  std::string got;
  std::string detail;  // presence problems
};

// Compares a transport's outputs with the sequential oracle; fills `diff`
// with the first difference found.
bool outputs_match_oracle(ScanAlgorithm algo,
                          std::span<const ElementVector> inputs,
                          const OperatorSpec& op,
                          const std::vector<std::optional<ElementVector>>& got,
                          Mismatch& diff) {
  const std::int64_t p = static_cast<std::int64_t>(inputs.size());
  std::vector<std::optional<ElementVector>> want;
  if (is_exclusive(algo)) {
    want = exclusive_prefix(inputs, op);
  } else {
    for (auto& v : inclusive_prefix(inputs, op)) want.emplace_back(std::move(v));
  }
  for (std::int64_t r = 0; r < p; ++r) {
    const auto& w = want[static_cast<std::size_t>(r)];
    const auto& g = got[static_cast<std::size_t>(r)];
    if (w.has_value() != g.has_value()) {
      diff.rank = r;
      diff.detail = w.has_value() ? "output missing at defined rank"
                                  : "unexpected output at undefined rank";
      return false;
    }
    if (!w) continue;
    if (*w == *g) continue;
    diff.rank = r;
    for (std::size_t i = 0; i < w->count(); ++i) {
      const auto we = w->element(i);
      const auto ge = g->element(i);
      if (!std::equal(we.begin(), we.end(), ge.begin())) {
        diff.element = i;
        diff.expected = hex_bytes(we);
        diff.got = hex_bytes(ge);
        break;
      }
    }
    return false;
  }
  return true;
}

std::vector<std::optional<ElementVector>> run_transport(
    const VerifyOptions& opts, ScanAlgorithm algo, std::int64_t p,
    std::span<const ElementVector> inputs, const OperatorSpec& op) {
  switch (opts.transport) {
    case VerifyTransport::Sim: {
      LockstepOptions lo;
      lo.record_trace = false;
      return lockstep_execute(algo, p, inputs, op, lo).outputs;
    }
    case VerifyTransport::Thread: {
      ThreadedOptions to;
      to.record_trace = false;
      return threaded_execute(algo, p, inputs, op, to).outputs;
    }
    case VerifyTransport::Socket: {
      LocalProcsOptions lp;
      lp.base_port = opts.base_port;
      lp.record_trace = false;
      return run_local_socket_procs(algo, p, inputs, op, lp).report.outputs;
    }
  }
  return {};
}

const char* transport_label(VerifyTransport t) {
  switch (t) {
    case VerifyTransport::Sim:
      return "sim";
    case VerifyTransport::Thread:
      return "thread";
    case VerifyTransport::Socket:
      return "socket";
  }
  return "?";
}

}  // namespace

int cmd_verify(const VerifyOptions& opts, std::ostream& out,
               std::ostream& err) {
  if (opts.p_min < 1 || opts.p_min > opts.p_max) {
    err << "verify: invalid processor range" << std::endl;
    return 2;
  }
  if (opts.ms.empty()) {
    err << "verify: need at least one element count" << std::endl;
    return 2;
  }
  std::vector<std::string> op_names =
      opts.ops.empty() ? builtin_operator_names() : opts.ops;

  bool all_pass = true;
  std::optional<Mismatch> first_diff;
  std::string first_diff_case;

  for (ScanAlgorithm algo : opts.algos) {
    for (const std::string& op_name : op_names) {
      const OperatorSpec op = builtin_operator(op_name);
      for (std::int64_t p = opts.p_min; p <= opts.p_max; ++p) {
        for (std::size_t m : opts.ms) {
          const auto inputs = make_inputs(
              op, p, m, opts.seed ? opts.seed : kDefaultInputSeed);
          Mismatch diff;
          bool pass = false;
          std::string error_note;
          try {
            const auto got = run_transport(opts, algo, p, inputs, op);
            pass = outputs_match_oracle(algo, inputs, op, got, diff);
          } catch (const std::exception& e) {
            error_note = e.what();
          }
          out << (pass ? "PASS" : "FAIL") << " algo=" << algorithm_id(algo)
              << " p=" << p << " m=" << m << " op=" << op_name
              << " transport=" << transport_label(opts.transport);
          if (is_exclusive(algo)) out << " rank0=undefined";
          if (!error_note.empty()) out << " error=\"" << error_note << "\"";
          out << "\n";
          if (!pass) {
            all_pass = false;
            if (!first_diff && error_note.empty()) {
              first_diff = diff;
              std::ostringstream c;
              c << algorithm_id(algo) << " p=" << p << " m=" << m
                << " op=" << op_name;
              first_diff_case = c.str();
            }
          }
        }
      }
    }
  }
  out.flush();
  if (!all_pass) {
    if (first_diff) {
      err << "first failure (" << first_diff_case << "): rank "
          << first_diff->rank;
      if (first_diff->detail.empty()) {
        err << " element " << first_diff->element << " expected "
            << first_diff->expected << " got " << first_diff->got;
      } else {
        err << " " << first_diff->detail;
      }
      err << std::endl;
    }
    return 1;
  }
  return 0;
}

int cmd_rounds(const RoundsOptions& opts, std::ostream& out,
               std::ostream& err) {
  if (opts.p_min < 2 || opts.p_min > opts.p_max) {
    err << "rounds: invalid processor range (need 2 <= p-min <= p-max)"
        << std::endl;
    return 2;
  }
  const OperatorSpec op = builtin_operator("wrap_sum_u64");
  bool all_ok = true;
  out << "algo,p,rounds_formula,rounds_measured,max_ops_measured,ops_bound\n";
  for (ScanAlgorithm algo : opts.algos) {
    for (std::int64_t p = opts.p_min; p <= opts.p_max; ++p) {
      const auto inputs = make_inputs(op, p, 1);
      LockstepOptions lo;
      lo.record_trace = false;
      const RunReport report = lockstep_execute(algo, p, inputs, op, lo);
      std::uint64_t max_ops = 0;
      for (const auto& m : report.metrics) {
        max_ops = std::max(max_ops, m.op_applications);
      }
      const std::uint64_t formula = round_count(algo, p);
      const std::uint64_t bound = ops_bound(algo, p);
      out << algorithm_id(algo) << "," << p << "," << formula << ","
          << report.measured_rounds << "," << max_ops << "," << bound << "\n";
      if (report.measured_rounds != formula || max_ops > bound) {
        all_ok = false;
      }
    }
  }
  out.flush();
  err << (all_ok ? "rounds: all rows match the formulas and operator bounds"
                 : "rounds: MISMATCH in at least one row")
      << std::endl;
  return all_ok ? 0 : 1;
}

int cmd_trace(const TraceOptions& opts, std::ostream& out, std::ostream& err) {
  if (opts.p < 2) {
    err << "trace: p must be >= 2" << std::endl;
    return 2;
  }
  const OperatorSpec op = builtin_operator("wrap_sum_u64");
  const auto inputs = make_inputs(op, opts.p, 1);
  const RunReport report =
      lockstep_execute(opts.algo, opts.p, inputs, op, LockstepOptions{});
  if (opts.csv) {
    out << "round,rank,send_to,recv_from,kind,ops\n";
    for (const TraceEvent& ev : report.trace) {
      out << ev.round << "," << ev.rank << ",";
      if (ev.sent_to) out << *ev.sent_to;
      else out << "-";
      out << ",";
      if (ev.received_from) out << *ev.received_from;
      else out << "-";
      out << "," << payload_kind_label(ev.payload_kind) << ","
          << ev.ops_this_round << "\n";
    }
  } else {
    for (const TraceEvent& ev : report.trace) {
      out << "round=" << ev.round << " rank=" << ev.rank << " send_to=";
      if (ev.sent_to) out << *ev.sent_to;
      else out << "-";
      out << " recv_from=";
      if (ev.received_from) out << *ev.received_from;
      else out << "-";
      out << " kind=" << payload_kind_label(ev.payload_kind)
          << " ops=" << ev.ops_this_round << "\n";
    }
  }
  out.flush();
  return 0;
}

namespace {

// One (algo, m) benchmark over the thread transport: persistent workers,
// two barriers before each repetition, per-rep time of the slowest rank.
std::vector<double> bench_thread_config(ScanAlgorithm algo, std::int64_t p,
                                        std::size_t m, const OperatorSpec& op,
                                        int reps, int warmups) {
  const auto inputs = make_inputs(op, p, m);
  const int total = reps + warmups;
  constexpr std::uint64_t kRepStride = 1u << 12;

  MessageRouter router;
  std::barrier sync(static_cast<std::ptrdiff_t>(p));
  std::vector<double> local(static_cast<std::size_t>(p) *
                            static_cast<std::size_t>(reps));
  std::atomic<bool> failed{false};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(p));

  {
    std::vector<std::jthread> workers;
    workers.reserve(static_cast<std::size_t>(p));
    for (std::int64_t r = 0; r < p; ++r) {
      workers.emplace_back([&, r] {
        for (int rep = 0; rep < total; ++rep) {
          sync.arrive_and_wait();
          sync.arrive_and_wait();
          if (failed.load(std::memory_order_relaxed)) continue;
          try {
            RouterChannel chan(router, r, p, default_recv_timeout(),
                               static_cast<std::uint64_t>(rep) * kRepStride);
            const auto t0 = std::chrono::steady_clock::now();
            run_rank(algo, r, p, inputs[static_cast<std::size_t>(r)], op,
                     chan, /*record_trace=*/false);
            const auto t1 = std::chrono::steady_clock::now();
            if (rep >= warmups) {
              local[static_cast<std::size_t>(rep - warmups) *
                        static_cast<std::size_t>(p) +
                    static_cast<std::size_t>(r)] =
                  std::chrono::duration<double>(t1 - t0).count();
            }
          } catch (...) {
            errors[static_cast<std::size_t>(r)] = std::current_exception();
            failed.store(true, std::memory_order_relaxed);
          }
        }
      });
    }
  }

  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<double> rep_times(static_cast<std::size_t>(reps));
  for (int rep = 0; rep < reps; ++rep) {
    double worst = 0;
    for (std::int64_t r = 0; r < p; ++r) {
      worst = std::max(worst, local[static_cast<std::size_t>(rep) *
                                        static_cast<std::size_t>(p) +
                                    static_cast<std::size_t>(r)]);
    }
    rep_times[static_cast<std::size_t>(rep)] = worst;
  }
  return rep_times;
}

std::vector<double> bench_socket_config(ScanAlgorithm algo, std::int64_t p,
                                        std::size_t m, const OperatorSpec& op,
                                        int reps, int warmups,
                                        std::uint16_t base_port) {
  const auto inputs = make_inputs(op, p, m);
  LocalProcsOptions lp;
  lp.base_port = base_port;
  lp.reps = reps;
  lp.warmups = warmups;
  lp.record_trace = false;
  const LocalProcsResult res =
      run_local_socket_procs(algo, p, inputs, op, lp);
  std::vector<double> rep_times(static_cast<std::size_t>(reps), 0.0);
  for (const auto& rank_times : res.rank_rep_seconds) {
    for (std::size_t i = 0; i < rank_times.size(); ++i) {
      rep_times[i] = std::max(rep_times[i], rank_times[i]);
    }
  }
  return rep_times;
}

}  // namespace

int cmd_bench(const BenchOptions& opts, std::ostream& out, std::ostream& err) {
  if (opts.p < 2 || opts.reps < 1 || opts.warmups < 0 || opts.ms.empty()) {
    err << "bench: need p >= 2, reps >= 1, warmups >= 0 and a nonempty m list"
        << std::endl;
    return 2;
  }
  OperatorSpec op;
  try {
    op = builtin_operator(opts.op);
  } catch (const std::invalid_argument& e) {
    err << "bench: " << e.what() << std::endl;
    return 2;
  }

  std::ofstream file;
  if (!opts.out_path.empty()) {
    file.open(opts.out_path, std::ios::trunc);
    if (!file) {
      err << "bench: cannot open output file " << opts.out_path << std::endl;
      return 1;
    }
  }
  std::ostream& csv = opts.out_path.empty() ? out : file;

  // min over repetitions of the slowest rank's time, at the largest m, for
  // the qualitative comparison note.
  struct Best {
    bool set = false;
    double min_us = 0;
  };
  Best d123_best, twoop_best;
  std::size_t largest_m = *std::max_element(opts.ms.begin(), opts.ms.end());

  csv << "transport,algo,p,m,element_width,reps,warmups,min_us,mean_us\n";
  int port_shift = 0;
  for (ScanAlgorithm algo : opts.algos) {
    for (std::size_t m : opts.ms) {
      std::vector<double> rep_times;
      try {
        if (opts.transport == BenchTransport::Thread) {
          rep_times = bench_thread_config(algo, opts.p, m, op, opts.reps,
                                          opts.warmups);
        } else {
          rep_times = bench_socket_config(
              algo, opts.p, m, op, opts.reps, opts.warmups,
              static_cast<std::uint16_t>(opts.base_port + port_shift));
          port_shift += static_cast<int>(opts.p);
        }
      } catch (const std::exception& e) {
        err << "bench: " << algorithm_id(algo) << " m=" << m
            << " failed: " << e.what() << std::endl;
        return 1;
      }
      const double min_s =
          *std::min_element(rep_times.begin(), rep_times.end());
      const double mean_s =
          std::accumulate(rep_times.begin(), rep_times.end(), 0.0) /
          static_cast<double>(rep_times.size());
      const double min_us = min_s * 1e6;
      const double mean_us = mean_s * 1e6;
      csv << (opts.transport == BenchTransport::Thread ? "thread" : "socket")
          << "," << algorithm_id(algo) << "," << opts.p << "," << m << ","
          << op.element_width << "," << opts.reps << "," << opts.warmups
          << "," << std::fixed << std::setprecision(3) << min_us << ","
          << mean_us << "\n";
      csv.flush();
      if (m == largest_m) {
        if (algo == ScanAlgorithm::OneTwoThreeDoubling) {
          d123_best = {true, min_us};
        } else if (algo == ScanAlgorithm::TwoOpDoubling) {
          twoop_best = {true, min_us};
        }
      }
    }
  }

  if (d123_best.set && twoop_best.set) {
    err << "bench note (informative): at m=" << largest_m << ", d123 min "
        << std::fixed << std::setprecision(3) << d123_best.min_us
        << " us vs twoop min " << twoop_best.min_us << " us ("
        << (d123_best.min_us <= twoop_best.min_us ? "d123 <= twoop"
                                                  : "d123 > twoop")
        << ")" << std::endl;
  }
  return 0;
}

namespace {

std::vector<ScanAlgorithm> parse_algo_list(const std::string& arg) {
  if (arg == "all") {
    return {all_scan_algorithms().begin(), all_scan_algorithms().end()};
  }
  std::vector<ScanAlgorithm> algos;
  std::stringstream ss(arg);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const auto a = parse_algorithm(tok);
    if (!a) {
      throw UsageError("unknown algorithm '" + tok +
                       "' (expected incl, twoop, shift1, d123 or all)");
    }
    algos.push_back(*a);
  }
  if (algos.empty()) throw UsageError("empty algorithm list");
  return algos;
}

// "N" or inclusive "A..B".
std::pair<std::int64_t, std::int64_t> parse_p_range(const std::string& arg) {
  const auto dots = arg.find("..");
  try {
    if (dots == std::string::npos) {
      const std::int64_t p = std::stoll(arg);
      return {p, p};
    }
    const std::int64_t lo = std::stoll(arg.substr(0, dots));
    const std::int64_t hi = std::stoll(arg.substr(dots + 2));
    return {lo, hi};
  } catch (const std::exception&) {
    throw UsageError("invalid processor count or range '" + arg + "'");
  }
}

std::vector<std::size_t> parse_m_list(const std::string& arg) {
  std::vector<std::size_t> ms;
  std::stringstream ss(arg);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      const long long v = std::stoll(tok);
      if (v < 0) throw UsageError("");
      ms.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw UsageError("invalid element count list '" + arg + "'");
    }
  }
  if (ms.empty()) throw UsageError("empty element count list");
  return ms;
}

std::vector<std::string> parse_op_list(const std::string& arg) {
  if (arg == "all") return {};
  std::vector<std::string> ops;
  std::stringstream ss(arg);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    builtin_operator(tok);  // validates
    ops.push_back(tok);
  }
  return ops;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"scanlab: message-passing prefix-scan protocol engine"};
  app.require_subcommand(1);

  // verify
  auto* verify = app.add_subcommand(
      "verify", "run scans and compare every rank against the sequential oracle");
  std::string v_algo = "all", v_p = "2..16", v_m = "1", v_op = "all",
              v_transport = "sim";
  std::uint64_t v_seed = 0;
  std::uint16_t v_port = 18100;
  verify->add_option("--algo", v_algo, "algorithm id or 'all'");
  verify->add_option("--p", v_p, "processor count N or range A..B");
  verify->add_option("--m", v_m, "comma-separated element counts");
  verify->add_option("--op", v_op, "operator name or 'all'");
  verify->add_option("--transport", v_transport, "sim | thread | socket");
  verify->add_option("--seed", v_seed, "input generator seed");
  verify->add_option("--base-port", v_port, "first listen port (socket)");

  // rounds
  auto* rounds = app.add_subcommand(
      "rounds", "CSV of formula vs measured rounds and operator counts");
  std::string r_algo = "all";
  std::int64_t r_pmin = 2, r_pmax = 64;
  rounds->add_option("--algo", r_algo, "algorithm id or 'all'");
  rounds->add_option("--p-min", r_pmin, "smallest processor count");
  rounds->add_option("--p-max", r_pmax, "largest processor count");

  // trace
  auto* trace = app.add_subcommand(
      "trace", "per-round communication trace of one configuration");
  std::string t_algo = "d123", t_format = "text";
  std::int64_t t_p = 8;
  trace->add_option("--algo", t_algo, "algorithm id");
  trace->add_option("--p", t_p, "processor count (>= 2)");
  trace->add_option("--format", t_format, "text | csv");

  // bench
  auto* bench = app.add_subcommand(
      "bench", "time repetitions and report min/mean per configuration");
  std::string b_transport = "thread", b_algo = "all", b_m = "1",
              b_op = "wrap_sum_u64", b_out;
  std::int64_t b_p = 8;
  int b_reps = 200, b_warmups = 15;
  std::uint16_t b_port = 18300;
  bench->add_option("--transport", b_transport, "thread | socket");
  bench->add_option("--algo", b_algo, "algorithm id or 'all'");
  bench->add_option("--p", b_p, "processor count");
  bench->add_option("--m", b_m, "comma-separated element counts");
  bench->add_option("--reps", b_reps, "timed repetitions");
  bench->add_option("--warmups", b_warmups, "untimed warmup repetitions");
  bench->add_option("--op", b_op, "operator name");
  bench->add_option("--out", b_out, "CSV output file (default stdout)");
  bench->add_option("--base-port", b_port, "first listen port (socket)");

  std::vector<const char*> argv;
  argv.push_back("scanlab");
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << std::endl;
    return 2;
  }

  try {
    if (verify->parsed()) {
      VerifyOptions o;
      o.algos = parse_algo_list(v_algo);
      std::tie(o.p_min, o.p_max) = parse_p_range(v_p);
      o.ms = parse_m_list(v_m);
      o.ops = parse_op_list(v_op);
      if (v_transport == "sim") o.transport = VerifyTransport::Sim;
      else if (v_transport == "thread") o.transport = VerifyTransport::Thread;
      else if (v_transport == "socket") o.transport = VerifyTransport::Socket;
      else throw UsageError("unknown transport '" + v_transport + "'");
      o.base_port = v_port;
      o.seed = v_seed;
      return cmd_verify(o, out, err);
    }
    if (rounds->parsed()) {
      RoundsOptions o;
      o.algos = parse_algo_list(r_algo);
      o.p_min = r_pmin;
      o.p_max = r_pmax;
      return cmd_rounds(o, out, err);
    }
    if (trace->parsed()) {
      TraceOptions o;
      const auto a = parse_algorithm(t_algo);
      if (!a) throw UsageError("unknown algorithm '" + t_algo + "'");
      o.algo = *a;
      o.p = t_p;
      if (t_format == "csv") o.csv = true;
      else if (t_format != "text") {
        throw UsageError("unknown trace format '" + t_format + "'");
      }
      return cmd_trace(o, out, err);
    }
    if (bench->parsed()) {
      BenchOptions o;
      if (b_transport == "thread") o.transport = BenchTransport::Thread;
      else if (b_transport == "socket") o.transport = BenchTransport::Socket;
      else throw UsageError("unknown transport '" + b_transport + "' (the simulator is not timed)");
      o.algos = parse_algo_list(b_algo);
      o.p = b_p;
      o.ms = parse_m_list(b_m);
      o.reps = b_reps;
      o.warmups = b_warmups;
      o.op = b_op;
      o.out_path = b_out;
      o.base_port = b_port;
      return cmd_bench(o, out, err);
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << std::endl;
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << std::endl;
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << std::endl;
    return 1;
  }
  err << "usage error: no subcommand given" << std::endl;
  return 2;
}

}  // namespace scanlab
