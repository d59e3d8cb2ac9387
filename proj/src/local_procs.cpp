#include "scanlab/local_procs.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <stdexcept>
#include <string>

#include "scanlab/socket_transport.hpp"

namespace scanlab {

namespace {

// Minimal same-host pipe serialization for one child's results.

void write_exact(int fd, const void* data, std::size_t len) {
  const char* p = static_cast<const char*>(data);
  while (len > 0) {
    const ssize_t n = ::write(fd, p, len);
    if (n < 0) {
      if (errno == EINTR) continue;
      _exit(3);  // parent vanished; nothing sensible left to do
    }
    p += n;
    len -= static_cast<std::size_t>(n);
  }
}

void read_exact(int fd, void* data, std::size_t len) {
  char* p = static_cast<char*>(data);
  while (len > 0) {
    const ssize_t n = ::read(fd, p, len);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw std::runtime_error("pipe read failed: " +
                               std::string(std::strerror(errno)));
    }
    if (n == 0) throw std::runtime_error("child closed its pipe early");
    p += n;
    len -= static_cast<std::size_t>(n);
  }
}

template <typename T>
void put(int fd, const T& v) {
  write_exact(fd, &v, sizeof v);
}

template <typename T>
T get(int fd) {
  T v;
  read_exact(fd, &v, sizeof v);
  return v;
}

void put_bytes(int fd, std::span<const std::byte> bytes) {
  put<std::uint64_t>(fd, bytes.size());
  if (!bytes.empty()) write_exact(fd, bytes.data(), bytes.size());
}

std::vector<std::byte> get_bytes(int fd) {
  std::vector<std::byte> bytes(get<std::uint64_t>(fd));
  if (!bytes.empty()) read_exact(fd, bytes.data(), bytes.size());
  return bytes;
}

void child_main(int fd, std::int64_t rank, ScanAlgorithm algo, std::int64_t p,
                const ElementVector& input, const OperatorSpec& op,
                const LocalProcsOptions& opts) {
  try {
    SocketRunConfig config;
    config.rank = rank;
    config.p = p;
    config.peers = local_peer_table(p, opts.base_port);
    config.algo = algo;
    config.recv_timeout = opts.recv_timeout;
    config.reps = opts.reps;
    config.warmups = opts.warmups;
    config.record_trace = opts.record_trace;

    SocketRunResult res = socket_execute(config, input, op);

    put<std::uint8_t>(fd, 0);  // ok
    put<std::uint8_t>(fd, res.output.has_value() ? 1 : 0);
    if (res.output) {
      put<std::uint64_t>(fd, res.output->count());
      put<std::uint64_t>(fd, res.output->element_width());
      put_bytes(fd, res.output->bytes());
    }
    put(fd, res.metrics);
    put<std::uint64_t>(fd, res.trace.size());
    for (const TraceEvent& ev : res.trace) {
      put<std::uint64_t>(fd, ev.round);
      put<std::int64_t>(fd, ev.rank);
      put<std::int64_t>(fd, ev.sent_to.value_or(-1));
      put<std::int64_t>(fd, ev.received_from.value_or(-1));
      put<std::uint8_t>(fd, static_cast<std::uint8_t>(ev.payload_kind));
      put<std::uint32_t>(fd, ev.ops_this_round);
    }
    put<std::uint64_t>(fd, res.rep_seconds.size());
    for (double s : res.rep_seconds) put(fd, s);
    ::close(fd);
    _exit(0);
  } catch (const std::exception& e) {
    put<std::uint8_t>(fd, 1);  // error marker
    const std::string msg = e.what();
    put<std::uint64_t>(fd, msg.size());
    write_exact(fd, msg.data(), msg.size());
    ::close(fd);
    _exit(1);
  }
}

}  // namespace

LocalProcsResult run_local_socket_procs(ScanAlgorithm algo, std::int64_t p,
                                        std::span<const ElementVector> inputs,
                                        const OperatorSpec& op,
                                        const LocalProcsOptions& opts) {
  if (p < 1 || static_cast<std::size_t>(p) != inputs.size()) {
    throw std::invalid_argument(
        "run_local_socket_procs: need one input vector per rank");
  }

  std::vector<pid_t> pids(static_cast<std::size_t>(p), -1);
  std::vector<int> read_fds(static_cast<std::size_t>(p), -1);

  for (std::int64_t r = 0; r < p; ++r) {
    int fds[2];
    if (::pipe(fds) != 0) {
      throw std::runtime_error("pipe() failed: " +
                               std::string(std::strerror(errno)));
    }
    const pid_t pid = ::fork();
    if (pid < 0) {
      ::close(fds[0]);
      ::close(fds[1]);
      throw std::runtime_error("fork() failed: " +
                               std::string(std::strerror(errno)));
    }
    if (pid == 0) {
      for (std::int64_t q = 0; q < r; ++q) ::close(read_fds[static_cast<std::size_t>(q)]);
      ::close(fds[0]);
      child_main(fds[1], r, algo, p, inputs[static_cast<std::size_t>(r)], op,
                 opts);
      _exit(0);  // unreachable
    }
    ::close(fds[1]);
    pids[static_cast<std::size_t>(r)] = pid;
    read_fds[static_cast<std::size_t>(r)] = fds[0];
  }

  LocalProcsResult result;
  result.report.trace_recorded = opts.record_trace;
  result.report.outputs.resize(static_cast<std::size_t>(p));
  result.report.metrics.resize(static_cast<std::size_t>(p));
  result.rank_rep_seconds.resize(static_cast<std::size_t>(p));

  std::vector<std::string> errors;
  for (std::int64_t r = 0; r < p; ++r) {
    const int fd = read_fds[static_cast<std::size_t>(r)];
    try {
      const auto status = get<std::uint8_t>(fd);
      if (status != 0) {
        std::string msg(get<std::uint64_t>(fd), '\0');
        read_exact(fd, msg.data(), msg.size());
        errors.push_back("rank " + std::to_string(r) + ": " + msg);
      } else {
        if (get<std::uint8_t>(fd) != 0) {
          const auto count = get<std::uint64_t>(fd);
          const auto width = get<std::uint64_t>(fd);
          result.report.outputs[static_cast<std::size_t>(r)] =
              ElementVector::from_bytes(get_bytes(fd), count, width);
        }
        result.report.metrics[static_cast<std::size_t>(r)] =
            get<RankMetrics>(fd);
        const auto trace_len = get<std::uint64_t>(fd);
        for (std::uint64_t i = 0; i < trace_len; ++i) {
          TraceEvent ev;
          ev.round = get<std::uint64_t>(fd);
          ev.rank = get<std::int64_t>(fd);
          if (const auto to = get<std::int64_t>(fd); to >= 0) ev.sent_to = to;
          if (const auto from = get<std::int64_t>(fd); from >= 0) {
            ev.received_from = from;
          }
          ev.payload_kind = static_cast<PayloadKind>(get<std::uint8_t>(fd));
          ev.ops_this_round = get<std::uint32_t>(fd);
          result.report.trace.push_back(ev);
          result.report.measured_rounds =
              std::max(result.report.measured_rounds, ev.round + 1);
        }
        auto& times = result.rank_rep_seconds[static_cast<std::size_t>(r)];
        times.resize(get<std::uint64_t>(fd));
        for (double& s : times) s = get<double>(fd);
      }
    } catch (const std::exception& e) {
      errors.push_back("rank " + std::to_string(r) + ": " + e.what() +
                       " (result pipe)");
    }
    ::close(fd);
  }

  for (std::int64_t r = 0; r < p; ++r) {
    int status = 0;
    ::waitpid(pids[static_cast<std::size_t>(r)], &status, 0);
    if (!WIFEXITED(status) || (WEXITSTATUS(status) != 0 &&
                               WEXITSTATUS(status) != 1)) {
      errors.push_back("rank " + std::to_string(r) +
                       " exited abnormally (status " + std::to_string(status) +
                       ")");
    }
  }

  if (!errors.empty()) {
    std::string joined;
    for (const auto& e : errors) {
      if (!joined.empty()) joined += "; ";
      joined += e;
    }
    throw std::runtime_error("socket run failed: " + joined);
  }

  std::stable_sort(result.report.trace.begin(), result.report.trace.end(),
                   [](const TraceEvent& a, const TraceEvent& b) {
                     return a.round != b.round ? a.round < b.round
                                               : a.rank < b.rank;
                   });
  if (!opts.record_trace) {
    for (const auto& m : result.report.metrics) {
      result.report.measured_rounds =
          std::max(result.report.measured_rounds, m.rounds_active);
    }
  }
  return result;
}

}  // namespace scanlab
