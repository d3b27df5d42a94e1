#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "uplif/index.hpp"
#include "uplif/tuner.hpp"
#include "uplif/workload.hpp"

namespace uplif {

// Reference ordered map with the index's observable API.
class SortedMapOracle {
 public:
  static SortedMapOracle bulk_load(std::span<const KeyValue> pairs);

  std::optional<Value> get(Key k) const;
  void insert(Key k, Value v) { map_[k] = v; }
  bool remove(Key k) { return map_.erase(k) > 0; }
  std::vector<KeyValue> range(Key lo, Key hi) const;
  std::size_t size() const { return map_.size(); }
  // Rough node footprint of a red-black map, for reporting only.
  std::size_t memory_usage() const { return map_.size() * 48; }

 private:
  std::map<Key, Value> map_;
};

struct Metrics {
  std::string workload;
  std::string dataset;
  int run = 0;
  std::uint64_t ops_completed = 0;
  double elapsed = 0.0;
  double throughput = 0.0;  // ops per second
  double p50_us = 0.0;
  double p99_us = 0.0;
  std::size_t index_bytes = 0;
  std::vector<std::size_t> bmat_height_series;
  std::vector<std::string> action_log;
  bool pool_exhausted = false;
  bool results_sorted = true;
  std::uint64_t result_digest = 0;
};

struct RunOptions {
  double duration_secs = 0.0;  // 0 = no time limit
  std::uint64_t op_count = 0;  // 0 = no count limit beyond the stream's
  std::size_t latency_every = 16;
  std::size_t series_every = 1000;
  Agent* agent = nullptr;  // UplifIndex only
  // Per-op result hashes, for exact cross-checks between structures.
  std::vector<std::uint64_t>* trace = nullptr;
};

namespace detail {

inline std::uint64_t mix64(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

double percentile(std::vector<double>& v, double p);

template <typename Target>
std::uint64_t apply_op(Target& t, const Op& op, bool& sorted_ok) {
  switch (op.type) {
    case OpType::kGet: {
      auto r = t.get(op.key);
      return r ? mix64(1, *r) : 0;
    }
    case OpType::kInsert:
      t.insert(op.key, op.value);
      return 2;
    case OpType::kRemove:
      return t.remove(op.key) ? 3 : 4;
    case OpType::kRange: {
      auto r = t.range(op.key, op.hi);
      std::uint64_t h = 5;
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (i > 0 && r[i].key <= r[i - 1].key) sorted_ok = false;
        h = mix64(mix64(h, r[i].key), r[i].value);
      }
      return h;
    }
  }
  return 0;
}

}  // namespace detail

template <typename Target>
Metrics run_benchmark(Target& target, OperationStream& stream, const RunOptions& opt) {
  using Clock = std::chrono::steady_clock;
  Metrics m;
  m.workload = workload_name(stream.spec().kind);
  std::vector<double> lat;
  const auto start = Clock::now();
  const auto deadline = start + std::chrono::duration_cast<Clock::duration>(
                                    std::chrono::duration<double>(opt.duration_secs));
  // With no duration and no count limit anywhere the run is empty.
  bool stop = opt.duration_secs <= 0.0 && opt.op_count == 0 && stream.spec().op_count == 0;

  auto run_some = [&](std::size_t n) -> std::size_t {
    std::size_t done = 0;
    Op op;
    while (done < n && !stop) {
      if (opt.op_count > 0 && m.ops_completed >= opt.op_count) {
        stop = true;
        break;
      }
      if (opt.duration_secs > 0.0 && (m.ops_completed & 255) == 0 && Clock::now() >= deadline) {
        stop = true;
        break;
      }
      if (!stream.next(op)) {
        stop = true;
        break;
      }
      std::uint64_t h;
      if (opt.latency_every > 0 && m.ops_completed % opt.latency_every == 0) {
        const auto t0 = Clock::now();
        h = detail::apply_op(target, op, m.results_sorted);
        lat.push_back(std::chrono::duration<double, std::micro>(Clock::now() - t0).count());
      } else {
        h = detail::apply_op(target, op, m.results_sorted);
      }
      m.result_digest = detail::mix64(m.result_digest, h);
      if (opt.trace) opt.trace->push_back(h);
      ++m.ops_completed;
      ++done;
      if constexpr (std::is_same_v<Target, UplifIndex>) {
        if (!opt.agent && opt.series_every > 0 && m.ops_completed % opt.series_every == 0) {
          m.bmat_height_series.push_back(target.bmat().height());
        }
      }
    }
    return done;
  };

  if constexpr (std::is_same_v<Target, UplifIndex>) {
    if (opt.agent) {
      IndexEnvironment env(target, run_some);
      while (!stop) {
        const StepReport rep = opt.agent->step(env);
        m.action_log.push_back(action_name(rep.executed));
        m.bmat_height_series.push_back(target.bmat().height());
        if (rep.ops == 0) break;
      }
    } else {
      run_some(SIZE_MAX);
    }
  } else {
    if (opt.agent) throw Error("agent runs need an UplifIndex");
    run_some(SIZE_MAX);
  }

  m.elapsed = std::chrono::duration<double>(Clock::now() - start).count();
  m.throughput = m.elapsed > 0.0 ? static_cast<double>(m.ops_completed) / m.elapsed : 0.0;
  m.p50_us = detail::percentile(lat, 0.50);
  m.p99_us = detail::percentile(lat, 0.99);
  m.index_bytes = target.memory_usage();
  m.pool_exhausted = stream.pool_exhausted();
  return m;
}

// Random ranges [lo, lo + span_fraction * domain] with lo drawn from the live
// keys; span 0 degenerates to point lookups.
template <typename Target>
Metrics run_range_benchmark(const Target& target, std::span<const Key> live_keys, std::size_t n_queries,
                            double span_fraction, std::uint64_t seed,
                            std::vector<std::vector<KeyValue>>* results = nullptr) {
  using Clock = std::chrono::steady_clock;
  Metrics m;
  m.workload = "range";
  if (live_keys.empty()) return m;
  const Key lo_key = *std::min_element(live_keys.begin(), live_keys.end());
  const Key hi_key = *std::max_element(live_keys.begin(), live_keys.end());
  const double width = static_cast<double>(hi_key - lo_key) * span_fraction;
  const Key span = static_cast<Key>(std::min(width, 1.8e19));
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, live_keys.size() - 1);
  std::vector<double> lat;
  lat.reserve(n_queries);
  const auto start = Clock::now();
  for (std::size_t q = 0; q < n_queries; ++q) {
    const Key lo = live_keys[pick(rng)];
    const Key hi = lo > UINT64_MAX - span ? UINT64_MAX : lo + span;
    const auto t0 = Clock::now();
    auto r = target.range(lo, hi);
    lat.push_back(std::chrono::duration<double, std::micro>(Clock::now() - t0).count());
    for (std::size_t i = 1; i < r.size(); ++i) {
      if (r[i].key <= r[i - 1].key) m.results_sorted = false;
    }
    for (const auto& kv : r) m.result_digest = detail::mix64(detail::mix64(m.result_digest, kv.key), kv.value);
    if (results) results->push_back(std::move(r));
    ++m.ops_completed;
  }
  m.elapsed = std::chrono::duration<double>(Clock::now() - start).count();
  m.throughput = m.elapsed > 0.0 ? static_cast<double>(m.ops_completed) / m.elapsed : 0.0;
  m.p50_us = detail::percentile(lat, 0.50);
  m.p99_us = detail::percentile(lat, 0.99);
  m.index_bytes = target.memory_usage();
  return m;
}

void emit_report(const std::vector<Metrics>& metrics, const std::string& path);

struct ReportRow {
  std::string workload;
  std::string dataset;
  int run = 0;
  double throughput_mops = 0.0;
  std::size_t index_bytes = 0;
  double p50_us = 0.0;
  double p99_us = 0.0;
};
std::vector<ReportRow> read_report(const std::string& path);

}  // namespace uplif
