#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "uplif/common.hpp"

namespace uplif {

enum class WorkloadKind { kReadOnly, kReadHeavy, kWriteHeavy, kWriteOnly, kDistributionShift };

const char* workload_name(WorkloadKind k);  // ro, rh, wh, wo, shift
WorkloadKind parse_workload(const std::string& name);
// Exact write fraction as numerator / 10.
int write_tenths(WorkloadKind k);

// Optional extras on top of the read/write schedule. Shares are fractions of
// reads (ranges, misses) or of writes (removes); the write ratio itself never
// changes.
struct StreamMix {
  double remove_share = 0.0;
  double range_share = 0.0;
  double miss_share = 0.0;
  double range_span = 1e-4;  // fraction of the key domain covered by a range
};

struct WorkloadSpec {
  WorkloadKind kind = WorkloadKind::kReadOnly;
  std::uint64_t op_count = 0;  // 0 = bounded by duration only
  double duration_secs = 0.0;
  std::uint64_t seed = 1;
  double init_fraction = 0.5;
  StreamMix mix;
};

enum class OpType : std::uint8_t { kGet, kInsert, kRemove, kRange };

struct Op {
  OpType type = OpType::kGet;
  Key key = 0;
  Key hi = 0;  // inclusive upper bound for ranges
  Value value = 0;
};

// Deterministic, lazily generated operation stream. Writes are scheduled (the
// i-th op is a write exactly when the running write count must advance), so
// any prefix holds the exact ratio up to one op.
class OperationStream {
 public:
  OperationStream(const WorkloadSpec& spec, std::span<const Key> keys);

  const WorkloadSpec& spec() const { return spec_; }
  // Sorted keys loaded before timing, with their values.
  const std::vector<KeyValue>& initial() const { return initial_; }
  std::size_t pool_remaining() const { return pool_.size() - pool_next_; }
  const std::vector<Key>& pool() const { return pool_; }

  // False once op_count ops were produced.
  bool next(Op& op);
  std::uint64_t produced() const { return produced_; }
  std::uint64_t writes() const { return writes_; }
  // Set when a scheduled insert found the pool empty and became a read.
  bool pool_exhausted() const { return exhausted_; }

 private:
  Op make_read();
  void add_live(Key k);
  void drop_live(std::size_t pos);

  WorkloadSpec spec_;
  std::mt19937_64 rng_;
  std::vector<KeyValue> initial_;
  std::vector<Key> pool_;
  std::size_t pool_next_ = 0;
  std::vector<Key> live_;
  std::unordered_map<Key, std::size_t> live_pos_;
  Key domain_lo_ = 0;
  Key domain_hi_ = 0;
  std::uint64_t produced_ = 0;
  std::uint64_t writes_ = 0;
  bool exhausted_ = false;
};

}  // namespace uplif
