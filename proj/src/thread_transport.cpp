#include "scanlab/thread_transport.hpp"

#include <algorithm>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>

#include "scanlab/engine.hpp"

namespace scanlab {

std::chrono::milliseconds default_recv_timeout() {
  const char* env = std::getenv("SCANLAB_RECV_TIMEOUT_MS");
  if (!env || !*env) return std::chrono::milliseconds(10000);
  char* end = nullptr;
  const long long v = std::strtoll(env, &end, 10);
  if (!end || *end != '\0' || v <= 0) {
    throw std::invalid_argument(
        "SCANLAB_RECV_TIMEOUT_MS must be a positive integer, got '" +
        std::string(env) + "'");
  }
  return std::chrono::milliseconds(v);
}

void MessageRouter::deposit(std::int64_t src, std::int64_t dst,
                            std::uint64_t round,
                            std::span<const std::byte> payload) {
  if (drop_ && drop_(src, dst, round)) return;
  std::vector<std::byte> bytes(payload.begin(), payload.end());
  {
    std::lock_guard lock(mu_);
    const Key key{src, dst, round};
    if (mailbox_.contains(key)) {
      throw std::logic_error("duplicate message from rank " +
                             std::to_string(src) + " to rank " +
                             std::to_string(dst) + " in round " +
                             std::to_string(round));
    }
    mailbox_.emplace(key, std::move(bytes));
  }
  cv_.notify_all();
}

std::vector<std::byte> MessageRouter::await(std::int64_t src, std::int64_t dst,
                                            std::uint64_t round,
                                            std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  const Key key{src, dst, round};
  const bool ok = cv_.wait_for(lock, timeout,
                               [&] { return mailbox_.contains(key); });
  if (!ok) {
    throw ReceiveTimeout("receive timed out at rank " + std::to_string(dst) +
                         " round " + std::to_string(round) +
                         " waiting for rank " + std::to_string(src));
  }
  auto node = mailbox_.extract(key);
  return std::move(node.mapped());
}

void RouterChannel::exchange(std::uint64_t round,
                             std::optional<std::int64_t> send_to,
                             std::span<const std::byte> payload,
                             std::optional<std::int64_t> recv_from,
                             ElementVector& recv_buf) {
  const std::uint64_t tag = round + tag_offset_;
  if (send_to) {
    router_->deposit(rank_, *send_to, tag, payload);
  }
  if (recv_from) {
    std::vector<std::byte> bytes =
        router_->await(*recv_from, rank_, tag, recv_timeout_);
    if (bytes.size() != recv_buf.byte_size()) {
      throw std::runtime_error("received payload of " +
                               std::to_string(bytes.size()) +
                               " bytes, expected " +
                               std::to_string(recv_buf.byte_size()));
    }
    std::copy(bytes.begin(), bytes.end(), recv_buf.bytes().begin());
  }
}

RunReport threaded_execute(ScanAlgorithm algo, std::int64_t p,
                           std::span<const ElementVector> inputs,
                           const OperatorSpec& op, ThreadedOptions opts) {
  if (p < 1 || static_cast<std::size_t>(p) != inputs.size()) {
    throw std::invalid_argument(
        "threaded_execute: need one input vector per rank");
  }
  if (p > opts.max_workers) {
    throw std::invalid_argument("threaded_execute: p exceeds the worker cap of " +
                                std::to_string(opts.max_workers));
  }

  MessageRouter router(opts.drop_message);
  std::vector<RankRunResult> results(static_cast<std::size_t>(p));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(p));

  {
    std::vector<std::jthread> workers;
    workers.reserve(static_cast<std::size_t>(p));
    for (std::int64_t r = 0; r < p; ++r) {
      workers.emplace_back([&, r] {
        try {
          RouterChannel chan(router, r, p, opts.recv_timeout);
          results[static_cast<std::size_t>(r)] =
              run_rank(algo, r, p, inputs[static_cast<std::size_t>(r)], op,
                       chan, opts.record_trace);
        } catch (...) {
          errors[static_cast<std::size_t>(r)] = std::current_exception();
        }
      });
    }
  }

  for (std::int64_t r = 0; r < p; ++r) {
    if (errors[static_cast<std::size_t>(r)]) {
      std::rethrow_exception(errors[static_cast<std::size_t>(r)]);
    }
  }

  RunReport report;
  report.trace_recorded = opts.record_trace;
  report.outputs.resize(static_cast<std::size_t>(p));
  report.metrics.resize(static_cast<std::size_t>(p));
  for (std::int64_t r = 0; r < p; ++r) {
    auto& res = results[static_cast<std::size_t>(r)];
    report.outputs[static_cast<std::size_t>(r)] = std::move(res.output);
    report.metrics[static_cast<std::size_t>(r)] = res.metrics;
    for (const auto& ev : res.trace) {
      report.measured_rounds = std::max(report.measured_rounds, ev.round + 1);
    }
    report.trace.insert(report.trace.end(), res.trace.begin(),
                        res.trace.end());
  }
  std::stable_sort(report.trace.begin(), report.trace.end(),
                   [](const TraceEvent& a, const TraceEvent& b) {
                     return a.round != b.round ? a.round < b.round
                                               : a.rank < b.rank;
                   });
  if (!opts.record_trace) {
    // Without a trace, derive measured rounds from per-rank activity.
    for (const auto& m : report.metrics) {
      report.measured_rounds = std::max(report.measured_rounds,
                                        m.rounds_active);
    }
  }
  return report;
}

}  // namespace scanlab
