#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>

#include "scanlab/element_vector.hpp"

namespace scanlab {

/// One logical round step over some transport. Implementations must honor
/// two contracts:
///
///   * Eager sends: a send completes without the destination having posted
///     its receive yet (capacity of at least one message per sender,
///     receiver and round). With that, a simultaneous send+receive never
///     deadlocks even when every rank does both.
///   * Matching: receives are matched by (source, round), never by arrival
///     order; messages between a fixed pair are delivered in send order.
class Communicator {
 public:
  virtual ~Communicator() = default;

  virtual std::int64_t rank() const = 0;
  virtual std::int64_t size() const = 0;

  /// Performs the optional send and optional receive of one round as a
  /// single simultaneous operation. When `recv_from` is set, blocks until
  /// the matching message arrives and copies it into `recv_buf`, whose
  /// pre-set shape dictates the expected byte count.
  virtual void exchange(std::uint64_t round, std::optional<std::int64_t> send_to,
                        std::span<const std::byte> payload,
                        std::optional<std::int64_t> recv_from,
                        ElementVector& recv_buf) = 0;
};

/// All-ranks rendezvous built from ceil(log2 p) simultaneous exchange steps
/// (a dissemination barrier). Tags its messages with rounds starting at
/// `tag_base`, which callers must keep disjoint from protocol rounds.
void dissemination_barrier(Communicator& comm, std::uint64_t tag_base);

}  // namespace scanlab
