#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "uplif/common.hpp"
#include "uplif/density.hpp"
#include "uplif/gapped_segment.hpp"
#include "uplif/model.hpp"
#include "uplif/tree_backend.hpp"

namespace uplif {

struct Adjustment {
  // Signed count of buffered updates with key < k over the whole tree.
  std::int64_t bias = 0;
  // The part of bias that lies inside the owning segment's range; this is
  // what shifts positions within that segment.
  std::int64_t range_bias = 0;
  std::optional<Value> hit;
  const GappedSegment* segment = nullptr;
  std::size_t node_visits = 0;
};

enum class UpdateOutcome { kUpdatedNode, kUpdatedInPlace, kInGap, kSegmentSplit };
enum class DeleteOutcome { kRemoved, kTombstoned, kNotFound };

const char* outcome_name(UpdateOutcome o);
const char* outcome_name(DeleteOutcome o);

struct PerfMeasures {
  std::size_t height = 0;
  std::size_t node_count = 0;
  std::size_t granularity = 0;  // smallest live count over segments
  double error_scaling = 0.0;   // largest α over segments
  std::size_t model_count = 0;  // distinct segment mappings
  std::size_t segment_count = 0;
  std::size_t live_keys = 0;  // slot-resident plus buffered
  Backend backend = Backend::kRedBlack;
};

struct SplitConfig {
  std::uint32_t K = 64;
  std::uint64_t d_max = 64;
  std::uint32_t shift_window = 8;
};

struct BmatMemory {
  std::size_t nodes = 0;
  std::size_t slots = 0;      // all slots, NULL included
  std::size_t null_slots = 0;  // part of `slots`
  std::size_t models = 0;
  std::size_t mappings = 0;
  std::size_t segment_meta = 0;

  std::size_t total() const { return nodes + slots + models + mappings + segment_meta; }
};

using Trainer = std::function<Model(std::span<const Key>, std::span<const double>, const ModelConfig&)>;

// Default trainer: Model::train over explicit positions.
Model train_on_positions(std::span<const Key> keys, std::span<const double> positions,
                         const ModelConfig& cfg);

class Bmat {
 public:
  // head owns every key below the first node.
  Bmat(Backend backend, SegmentPtr head, std::uint32_t branching = 32);

  Backend backend() const { return tree_->kind(); }
  std::uint32_t branching() const { return branching_; }
  std::size_t height() const { return tree_->height(); }
  std::size_t node_count() const { return tree_->size(); }
  std::size_t split_count() const { return splits_; }

  Adjustment lookup_adjustment(Key k) const;
  UpdateOutcome insert_update(Key k, Value v, const DensityModel& density, const SplitConfig& cfg);
  DeleteOutcome delete_update(Key k);

  // Rebuilds the same entries under the other backend.
  void convert(Backend target);
  // Merges the cheapest contiguous run of nodes whose removal lets a
  // balanced rebuild drop one level, retraining one model on the merged keys.
  void prune_retrain(const Trainer& trainer, const ModelConfig& cfg, const DensityModel& density,
                     std::uint64_t d_max);

  // Served from aggregates maintained on every mutation; only the
  // granularity and α scan touches each segment.
  PerfMeasures stats() const;
  BmatMemory memory() const;
  // The same quantities recomputed by walking the tree.
  PerfMeasures stats_by_traversal() const;
  BmatMemory memory_by_traversal() const;

  const GappedSegment& head() const { return *head_; }
  // Visits the head segment (owner null) then every node in key order.
  void for_each_segment(const std::function<void(const GappedSegment&, const BmatEntry*)>& fn) const;
  void collect(Key lo, Key hi, std::vector<KeyValue>& out) const;
  void for_each_live(const std::function<void(Key, Value)>& fn) const;
  // Owning-range bias for a given segment owner (0 for keys equal to its key).
  static std::int64_t range_bias_for(const BmatEntry* owner, Key k);

  std::int64_t left_count(Key k) const { return tree_->left_count(k); }
  void check_invariants() const;

 private:
  std::unique_ptr<TreeBackend> make_tree(Backend b) const;
  void recount_aggregates();


  std::unique_ptr<TreeBackend> tree_;
  SegmentPtr head_;
  std::uint32_t branching_;
  std::size_t splits_ = 0;

  std::vector<const GappedSegment*> registry_;  // head plus every node's segment
  std::size_t buffered_ = 0;
  std::size_t slot_live_ = 0;
  std::size_t slot_total_ = 0;
  std::size_t mapping_count_ = 0;
  std::size_t model_bytes_ = 0;
  // Granularity/α scan result, reused until the next mutation.
  mutable bool scan_dirty_ = true;
  mutable std::size_t scan_granularity_ = 0;
  mutable double scan_alpha_ = 0.0;
};

}  // namespace uplif
