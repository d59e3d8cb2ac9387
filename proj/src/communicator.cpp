#include "scanlab/communicator.hpp"

namespace scanlab {

void dissemination_barrier(Communicator& comm, std::uint64_t tag_base) {
  const std::int64_t p = comm.size();
  const std::int64_t r = comm.rank();
  if (p <= 1) return;
  ElementVector empty(0, 1);
  std::uint64_t step = 0;
  for (std::int64_t dist = 1; dist < p; dist *= 2, ++step) {
    const std::int64_t to = (r + dist) % p;
    const std::int64_t from = (r - dist + p) % p;
    comm.exchange(tag_base + step, to, {}, from, empty);
  }
}

}  // namespace scanlab
