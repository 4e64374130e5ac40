// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "pfem/sparse.hpp"
#include "pfem/types.hpp"

namespace pfem {

/// Pipeline stage a message or barrier is charged to.
enum class Phase { Assembly, Bc, Symmetrize, Precond, SolveSetup, SolveIteration };
inline constexpr int kPhaseCount = 6;
inline constexpr std::array<Phase, kPhaseCount> kAllPhases{Phase::Assembly,   Phase::Bc,
                                                           Phase::Symmetrize, Phase::Precond,
                                                           Phase::SolveSetup, Phase::SolveIteration};

const char* to_string(Phase phase);

/// Message tags; a receive matches the oldest message from the given source
/// carrying the given tag.
namespace tags {
inline constexpr int kConcat = 1;
inline constexpr int kConcatResult = 2;
inline constexpr int kBcDofs = 10;
inline constexpr int kSymmetrize = 11;
inline constexpr int kIcRow = 20;
inline constexpr int kIcInsert = 21;
inline constexpr int kForward = 22;
inline constexpr int kBackward = 23;
inline constexpr int kUser = 1000;
}  // namespace tags

/// Immutable payload. Byte accounting: 16 bytes per complex value and 8 per
/// index; headers are free.
struct Message {
  int source = -1;
  int tag = 0;
  std::vector<Index> indices;
  std::vector<Complex> values;

  Index bytes() const { return 16 * static_cast<Index>(values.size()) + 8 * static_cast<Index>(indices.size()); }
};

struct MessageCounters {
  Index messages = 0;
  Index bytes = 0;

  MessageCounters& operator+=(const MessageCounters& o) {
    messages += o.messages;
    bytes += o.bytes;
    return *this;
  }
};

/// Snapshot of the fabric counters, by sending rank and phase. Barriers are
/// counted once per collective.
struct CounterReport {
  std::vector<std::array<MessageCounters, kPhaseCount>> per_rank;
  std::array<Index, kPhaseCount> barriers{};

  int ranks() const { return static_cast<int>(per_rank.size()); }
  MessageCounters phase_total(Phase phase) const;
  MessageCounters rank_total(int rank) const;
  MessageCounters total() const;
  Index barrier_total() const;
  Index phase_barriers(Phase phase) const { return barriers[static_cast<int>(phase)]; }
};

/// Phase-by-rank difference `after - before`.
CounterReport difference(const CounterReport& after, const CounterReport& before);

struct FabricOptions {
  /// Longest a rank waits in a receive or barrier before declaring deadlock.
  std::chrono::milliseconds watchdog{60000};
  /// When set, ranks randomly yield around every communication call, which
  /// perturbs the interleaving without changing results.
  std::optional<std::uint64_t> jitter_seed;
};

class Communicator;

/// In-process P-rank message-passing machine. Each rank runs on its own
/// thread; all cross-rank data moves through send/recv.
class CommFabric {
 public:
  explicit CommFabric(int ranks, FabricOptions options = {});
  CommFabric(const CommFabric&) = delete;
  CommFabric& operator=(const CommFabric&) = delete;
  ~CommFabric();

  int size() const { return ranks_; }

  /// Runs `body` once per rank, concurrently, and joins. The first failure
  /// tears the fabric down and is rethrown here.
  void run(const std::function<void(Communicator&)>& body);

  CounterReport counters() const;
  void reset_counters();

 private:
  friend class Communicator;

  struct Inbox {
    std::mutex mutex;
    std::condition_variable cv;
    std::deque<Message> queue;
  };

  void post(int source, int dest, Phase phase, Message message);
  Message take(int rank, int source, int tag);
  void arrive(Phase phase);
  void abort(std::exception_ptr error, bool root_cause);

  int ranks_;
  FabricOptions options_;
  std::vector<std::unique_ptr<Inbox>> inboxes_;

  mutable std::mutex counter_mutex_;
  CounterReport counters_;

  std::mutex barrier_mutex_;
  std::condition_variable barrier_cv_;
  int barrier_waiting_ = 0;
  std::uint64_t barrier_generation_ = 0;

  std::mutex abort_mutex_;
  bool aborted_ = false;
  std::exception_ptr first_error_;
};

/// A rank's handle on the fabric.
class Communicator {
 public:
  Communicator(CommFabric& fabric, int rank);

  int rank() const { return rank_; }
  int size() const { return fabric_->size(); }

  Phase phase() const { return phase_; }
  void set_phase(Phase phase) { phase_ = phase; }

  void send(int dest, int tag, std::vector<Index> indices, std::vector<Complex> values);
  Message recv(int source, int tag);
  void barrier();

 private:
  void jitter();

  CommFabric* fabric_;
  int rank_;
  Phase phase_ = Phase::Assembly;
  std::optional<std::mt19937_64> rng_;
};

enum class ConcatStrategy { Spmd, MasterSlave };

const char* to_string(ConcatStrategy strategy);

/// Every rank broadcasts its non-zeros to all others and sums the P partials
/// in ascending rank order: P^2 - P messages.
CVector spmd_concat(Communicator& comm, const SparseVector<Complex>& partial);

/// Ranks send their non-zeros to rank 0, which sums in ascending rank order
/// and sends the dense result back: 2 (P - 1) messages.
CVector master_slave_concat(Communicator& comm, const SparseVector<Complex>& partial);

CVector concat(Communicator& comm, ConcatStrategy strategy, const SparseVector<Complex>& partial);

}  // namespace pfem
