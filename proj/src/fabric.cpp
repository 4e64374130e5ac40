// SPDX-License-Identifier: Apache-2.0

#include "pfem/fabric.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <thread>

namespace pfem {

const char* to_string(Phase phase) {
  switch (phase) {
    case Phase::Assembly:
      return "assembly";
    case Phase::Bc:
      return "bc";
    case Phase::Symmetrize:
      return "symmetrize";
    case Phase::Precond:
      return "precond";
    case Phase::SolveSetup:
      return "solve-setup";
    case Phase::SolveIteration:
      return "solve-iteration";
  }
  return "?";
}

const char* to_string(ConcatStrategy strategy) {
  return strategy == ConcatStrategy::Spmd ? "spmd" : "ms";
}

MessageCounters CounterReport::phase_total(Phase phase) const {
  MessageCounters t;
  for (const auto& r : per_rank) t += r[static_cast<int>(phase)];
  return t;
}

MessageCounters CounterReport::rank_total(int rank) const {
  MessageCounters t;
  for (const auto& c : per_rank.at(rank)) t += c;
  return t;
}

MessageCounters CounterReport::total() const {
  MessageCounters t;
  for (int r = 0; r < ranks(); ++r) t += rank_total(r);
  return t;
}

Index CounterReport::barrier_total() const {
  Index t = 0;
  for (Index b : barriers) t += b;
  return t;
}

CounterReport difference(const CounterReport& after, const CounterReport& before) {
  if (after.ranks() != before.ranks()) throw std::invalid_argument("difference: rank counts differ");
  CounterReport d = after;
  for (int r = 0; r < after.ranks(); ++r) {
    for (int p = 0; p < kPhaseCount; ++p) {
      d.per_rank[r][p].messages -= before.per_rank[r][p].messages;
      d.per_rank[r][p].bytes -= before.per_rank[r][p].bytes;
    }
  }
  for (int p = 0; p < kPhaseCount; ++p) d.barriers[p] -= before.barriers[p];
  return d;
}

CommFabric::CommFabric(int ranks, FabricOptions options) : ranks_(ranks), options_(options) {
  if (ranks < 1) throw std::invalid_argument("CommFabric: at least one rank required");
  for (int r = 0; r < ranks; ++r) inboxes_.push_back(std::make_unique<Inbox>());
  counters_.per_rank.resize(static_cast<std::size_t>(ranks));
}

CommFabric::~CommFabric() = default;

void CommFabric::run(const std::function<void(Communicator&)>& body) {
  {
    std::lock_guard lock(abort_mutex_);
    aborted_ = false;
    first_error_ = nullptr;
  }
  {
    std::lock_guard lock(barrier_mutex_);
    barrier_waiting_ = 0;
  }
  for (auto& box : inboxes_) {
    std::lock_guard lock(box->mutex);
    box->queue.clear();
  }

  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(ranks_));
  for (int r = 0; r < ranks_; ++r) {
    threads.emplace_back([this, r, &body] {
      Communicator comm(*this, r);
      try {
        body(comm);
      } catch (const FabricAborted&) {
        abort(std::current_exception(), false);
      } catch (...) {
        abort(std::current_exception(), true);
      }
    });
  }
  for (auto& t : threads) t.join();

  std::exception_ptr error;
  {
    std::lock_guard lock(abort_mutex_);
    error = first_error_;
  }
  if (error) std::rethrow_exception(error);
  for (int r = 0; r < ranks_; ++r) {
    if (!inboxes_[r]->queue.empty()) {
      throw Error("fabric: rank " + std::to_string(r) + " finished with unconsumed messages");
    }
  }
}

void CommFabric::abort(std::exception_ptr error, bool root_cause) {
  {
    std::lock_guard lock(abort_mutex_);
    if (!first_error_ || (root_cause && !aborted_)) first_error_ = error;
    aborted_ = true;
  }
  for (auto& box : inboxes_) {
    std::lock_guard lock(box->mutex);
    box->cv.notify_all();
  }
  std::lock_guard lock(barrier_mutex_);
  barrier_cv_.notify_all();
}

CounterReport CommFabric::counters() const {
  std::lock_guard lock(counter_mutex_);
  return counters_;
}

void CommFabric::reset_counters() {
  std::lock_guard lock(counter_mutex_);
  counters_ = CounterReport{};
  counters_.per_rank.resize(static_cast<std::size_t>(ranks_));
}

void CommFabric::post(int source, int dest, Phase phase, Message message) {
  if (dest < 0 || dest >= ranks_ || dest == source) {
    throw std::invalid_argument("send: invalid destination " + std::to_string(dest));
  }
  message.source = source;
  {
    std::lock_guard lock(counter_mutex_);
    auto& c = counters_.per_rank[source][static_cast<int>(phase)];
    ++c.messages;
    c.bytes += message.bytes();
  }
  Inbox& box = *inboxes_[dest];
  {
    std::lock_guard lock(box.mutex);
    box.queue.push_back(std::move(message));
  }
  box.cv.notify_all();
}

Message CommFabric::take(int rank, int source, int tag) {
  Inbox& box = *inboxes_[rank];
  std::unique_lock lock(box.mutex);
  const auto deadline = std::chrono::steady_clock::now() + options_.watchdog;
  for (;;) {
    const auto it = std::find_if(box.queue.begin(), box.queue.end(),
                                 [&](const Message& m) { return m.source == source && m.tag == tag; });
    if (it != box.queue.end()) {
      Message m = std::move(*it);
      box.queue.erase(it);
      return m;
    }
    {
      std::lock_guard alock(abort_mutex_);
      if (aborted_) throw FabricAborted("fabric aborted while rank " + std::to_string(rank) + " was receiving");
    }
    if (box.cv.wait_until(lock, deadline) == std::cv_status::timeout) {
      throw DeadlockError("rank " + std::to_string(rank) + " waited too long for tag " + std::to_string(tag) +
                          " from rank " + std::to_string(source));
    }
  }
}

void CommFabric::arrive(Phase phase) {
  std::unique_lock lock(barrier_mutex_);
  {
    std::lock_guard alock(abort_mutex_);
    if (aborted_) throw FabricAborted("fabric aborted before barrier");
  }
  const std::uint64_t generation = barrier_generation_;
  if (++barrier_waiting_ == ranks_) {
    barrier_waiting_ = 0;
    ++barrier_generation_;
    {
      std::lock_guard clock(counter_mutex_);
      ++counters_.barriers[static_cast<int>(phase)];
    }
    barrier_cv_.notify_all();
    return;
  }
  const auto deadline = std::chrono::steady_clock::now() + options_.watchdog;
  while (barrier_generation_ == generation) {
    {
      std::lock_guard alock(abort_mutex_);
      if (aborted_) throw FabricAborted("fabric aborted inside barrier");
    }
    if (barrier_cv_.wait_until(lock, deadline) == std::cv_status::timeout && barrier_generation_ == generation) {
      throw DeadlockError("barrier timed out with " + std::to_string(barrier_waiting_) + " of " +
                          std::to_string(ranks_) + " ranks present");
    }
  }
}

Communicator::Communicator(CommFabric& fabric, int rank) : fabric_(&fabric), rank_(rank) {
  if (fabric.options_.jitter_seed) rng_.emplace(*fabric.options_.jitter_seed * 7919u + static_cast<unsigned>(rank));
}

void Communicator::jitter() {
  if (!rng_) return;
  const auto roll = (*rng_)() % 8;
  if (roll == 0) {
    std::this_thread::sleep_for(std::chrono::microseconds(20));
  } else if (roll < 4) {
    std::this_thread::yield();
  }
}

void Communicator::send(int dest, int tag, std::vector<Index> indices, std::vector<Complex> values) {
  jitter();
  Message m;
  m.tag = tag;
  m.indices = std::move(indices);
  m.values = std::move(values);
  fabric_->post(rank_, dest, phase_, std::move(m));
}

Message Communicator::recv(int source, int tag) {
  jitter();
  if (source < 0 || source >= size() || source == rank_) {
    throw std::invalid_argument("recv: invalid source " + std::to_string(source));
  }
  return fabric_->take(rank_, source, tag);
}

void Communicator::barrier() {
  jitter();
  if (size() == 1) {
    fabric_->arrive(phase_);
    return;
  }
  fabric_->arrive(phase_);
}

namespace {

void accumulate(CVector& out, const std::vector<Index>& idx, const std::vector<Complex>& val) {
  if (idx.size() != val.size()) throw Error("concat: malformed partial vector");
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] < 0 || idx[k] >= out.size()) throw Error("concat: index out of range");
    out[idx[k]] += val[k];
  }
}

}  // namespace

CVector spmd_concat(Communicator& comm, const SparseVector<Complex>& partial) {
  const int p = comm.size();
  for (int r = 0; r < p; ++r) {
    if (r != comm.rank()) comm.send(r, tags::kConcat, partial.indices, partial.values);
  }
  CVector out = CVector::Zero(partial.size);
  for (int r = 0; r < p; ++r) {
    if (r == comm.rank()) {
      accumulate(out, partial.indices, partial.values);
    } else {
      const Message m = comm.recv(r, tags::kConcat);
      accumulate(out, m.indices, m.values);
    }
  }
  return out;
}

CVector master_slave_concat(Communicator& comm, const SparseVector<Complex>& partial) {
  const int p = comm.size();
  if (comm.rank() != 0) {
    comm.send(0, tags::kConcat, partial.indices, partial.values);
    Message m = comm.recv(0, tags::kConcatResult);
    if (static_cast<Index>(m.values.size()) != partial.size) throw Error("master_slave_concat: bad result length");
    return Eigen::Map<const CVector>(m.values.data(), partial.size);
  }
  CVector out = CVector::Zero(partial.size);
  accumulate(out, partial.indices, partial.values);
  for (int r = 1; r < p; ++r) {
    const Message m = comm.recv(r, tags::kConcat);
    accumulate(out, m.indices, m.values);
  }
  for (int r = 1; r < p; ++r) {
    comm.send(r, tags::kConcatResult, {}, std::vector<Complex>(out.data(), out.data() + out.size()));
  }
  return out;
}

CVector concat(Communicator& comm, ConcatStrategy strategy, const SparseVector<Complex>& partial) {
  return strategy == ConcatStrategy::Spmd ? spmd_concat(comm, partial) : master_slave_concat(comm, partial);
}

}  // namespace pfem
