#include "uplif/workload.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace uplif {

const char* workload_name(WorkloadKind k) {
  switch (k) {
    case WorkloadKind::kReadOnly: return "ro";
    case WorkloadKind::kReadHeavy: return "rh";
    case WorkloadKind::kWriteHeavy: return "wh";
    case WorkloadKind::kWriteOnly: return "wo";
    case WorkloadKind::kDistributionShift: return "shift";
  }
  return "?";
}

WorkloadKind parse_workload(const std::string& name) {
  for (auto k : {WorkloadKind::kReadOnly, WorkloadKind::kReadHeavy, WorkloadKind::kWriteHeavy,
                 WorkloadKind::kWriteOnly, WorkloadKind::kDistributionShift}) {
    if (name == workload_name(k)) return k;
  }
  throw Error("unknown workload '" + name + "'");
}

int write_tenths(WorkloadKind k) {
  switch (k) {
    case WorkloadKind::kReadOnly: return 0;
    case WorkloadKind::kReadHeavy: return 1;
    case WorkloadKind::kWriteHeavy: return 5;
    case WorkloadKind::kWriteOnly: return 10;
    case WorkloadKind::kDistributionShift: return 5;
  }
  return 0;
}

OperationStream::OperationStream(const WorkloadSpec& spec, std::span<const Key> keys)
    : spec_(spec), rng_(spec.seed) {
  if (keys.empty()) throw Error("empty dataset");
  if (!(spec.init_fraction > 0.0 && spec.init_fraction <= 1.0)) throw Error("init_fraction must lie in (0,1]");
  std::vector<Key> sorted(keys.begin(), keys.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  const std::size_t n = sorted.size();
  const std::size_t init = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(static_cast<double>(n) * spec.init_fraction)), 1, n);

  std::vector<Key> chosen;
  if (spec.kind == WorkloadKind::kDistributionShift) {
    chosen.assign(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(init));
    pool_.assign(sorted.begin() + static_cast<std::ptrdiff_t>(init), sorted.end());
  } else {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng_);
    for (std::size_t i = 0; i < n; ++i) (i < init ? chosen : pool_).push_back(sorted[order[i]]);
    std::sort(chosen.begin(), chosen.end());
  }
  std::shuffle(pool_.begin(), pool_.end(), rng_);

  initial_.reserve(chosen.size());
  live_.reserve(n);
  for (Key k : chosen) {
    initial_.push_back({k, rng_()});
    add_live(k);
  }
  domain_lo_ = sorted.front();
  domain_hi_ = sorted.back();
}

void OperationStream::add_live(Key k) {
  // Positions are only needed to drop removed keys from the read set.
  if (spec_.mix.remove_share > 0.0 && !live_pos_.emplace(k, live_.size()).second) return;
  live_.push_back(k);
}

void OperationStream::drop_live(std::size_t pos) {
  const Key gone = live_[pos];
  live_pos_.erase(gone);
  if (pos + 1 != live_.size()) {
    live_[pos] = live_.back();
    live_pos_[live_[pos]] = pos;
  }
  live_.pop_back();
}

Op OperationStream::make_read() {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  Op op;
  op.type = OpType::kGet;
  const bool ranged = spec_.mix.range_share > 0.0 && coin(rng_) < spec_.mix.range_share;
  const bool miss = live_.empty() || (spec_.mix.miss_share > 0.0 && coin(rng_) < spec_.mix.miss_share);
  if (miss) {
    std::uniform_int_distribution<Key> any(domain_lo_, domain_hi_);
    op.key = any(rng_);
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, live_.size() - 1);
    op.key = live_[pick(rng_)];
  }
  if (ranged) {
    op.type = OpType::kRange;
    const double width = static_cast<double>(domain_hi_ - domain_lo_) * spec_.mix.range_span;
    const Key span = static_cast<Key>(std::min(width, 1.8e19));
    op.hi = op.key > std::numeric_limits<Key>::max() - span ? std::numeric_limits<Key>::max() : op.key + span;
  }
  return op;
}

bool OperationStream::next(Op& op) {
  if (spec_.op_count > 0 && produced_ >= spec_.op_count) return false;
  const std::uint64_t i = produced_++;
  const std::uint64_t t = static_cast<std::uint64_t>(write_tenths(spec_.kind));
  const bool write = (i + 1) * t / 10 > i * t / 10;
  if (!write) {
    op = make_read();
    return true;
  }
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (spec_.mix.remove_share > 0.0 && !live_.empty() && coin(rng_) < spec_.mix.remove_share) {
    std::uniform_int_distribution<std::size_t> pick(0, live_.size() - 1);
    const std::size_t pos = pick(rng_);
    op = Op{OpType::kRemove, live_[pos], 0, 0};
    drop_live(pos);
    ++writes_;
    return true;
  }
  if (pool_next_ >= pool_.size()) {
    exhausted_ = true;
    op = make_read();
    return true;
  }
  const Key k = pool_[pool_next_++];
  op = Op{OpType::kInsert, k, 0, rng_()};
  add_live(k);
  ++writes_;
  return true;
}

}  // namespace uplif
