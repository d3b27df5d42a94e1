#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "uplif/bmat.hpp"
#include "uplif/common.hpp"
#include "uplif/density.hpp"
#include "uplif/model.hpp"

namespace uplif {

struct IndexConfig {
  std::uint32_t K = 64;             // keys moved into a split's middle segment
  std::uint64_t d_max = 64;         // placeholder budget per expansion; 0 disables gaps
  std::uint32_t xi = 8;             // last-mile margin in slots
  std::size_t gmm_components = 4;
  std::size_t min_fit_samples = 256;
  std::uint32_t shift_window = 8;
  ModelConfig model;
  Backend backend = Backend::kRedBlack;
  std::uint32_t branching = 32;
  std::size_t update_log_capacity = 65536;
  std::size_t refit_interval = 65536;  // inserts between automatic density refits; 0 = manual only
  std::size_t fit_sample_cap = 4096;   // keys handed to EM per refit

  // Throws Error("invalid config: <field>") on the first bad field.
  void validate() const;
};

struct MemoryBreakdown {
  std::size_t models = 0;
  std::size_t mappings = 0;
  std::size_t nodes = 0;
  std::size_t slots = 0;
  std::size_t null_slots = 0;  // included in slots
  std::size_t segment_meta = 0;
  std::size_t density = 0;

  std::size_t total() const { return models + mappings + nodes + slots + segment_meta + density; }
};

struct IndexCounters {
  std::uint64_t gets = 0;
  std::uint64_t slots_inspected = 0;
  std::uint64_t node_visits = 0;
  std::uint64_t in_gap = 0;
  std::uint64_t splits = 0;
  std::uint64_t node_updates = 0;
  std::uint64_t in_place_updates = 0;
  std::uint64_t density_refits = 0;
};

// Single writer; readers must not overlap a mutation.
class UplifIndex {
 public:
  static UplifIndex bulk_load(std::span<const KeyValue> pairs, const IndexConfig& cfg = {});

  std::optional<Value> get(Key k) const;
  UpdateOutcome insert(Key k, Value v);
  bool remove(Key k);
  std::vector<KeyValue> range(Key lo, Key hi) const;

  std::size_t memory_usage() const { return memory_breakdown().total(); }
  MemoryBreakdown memory_breakdown() const;

  // Refits the update density from the log when enough updates were seen.
  void refresh_density();
  const DensityModel& density() const { return density_; }
  std::vector<Key> update_log() const;

  // Tuning actions.
  void convert(Backend target) { bmat_->convert(target); }
  void prune();

  PerfMeasures stats() const { return bmat_->stats(); }
  std::size_t size() const { return stats().live_keys; }
  const Bmat& bmat() const { return *bmat_; }
  const Model& base_model() const { return *bmat_->head().mapping()->model; }
  const IndexConfig& config() const { return cfg_; }
  const IndexCounters& counters() const { return counters_; }
  void reset_counters() { counters_ = {}; }
  void check_invariants() const { bmat_->check_invariants(); }

 private:
  UplifIndex() = default;
  void log_update(Key k);

  IndexConfig cfg_;
  std::unique_ptr<Bmat> bmat_;
  DensityModel density_ = DensityModel::uniform();
  std::vector<Key> log_;
  std::size_t log_next_ = 0;
  std::size_t since_refit_ = 0;
  mutable IndexCounters counters_;
};

}  // namespace uplif
