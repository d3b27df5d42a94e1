#include "uplif/bmat.hpp"

#include <algorithm>
#include <limits>
#include <unordered_map>
#include <unordered_set>

namespace uplif {

const char* outcome_name(UpdateOutcome o) {
  switch (o) {
    case UpdateOutcome::kUpdatedNode: return "updated-node";
    case UpdateOutcome::kUpdatedInPlace: return "updated-in-place";
    case UpdateOutcome::kInGap: return "in-gap";
    case UpdateOutcome::kSegmentSplit: return "segment-split";
  }
  return "?";
}

const char* outcome_name(DeleteOutcome o) {
  switch (o) {
    case DeleteOutcome::kRemoved: return "removed";
    case DeleteOutcome::kTombstoned: return "tombstoned";
    case DeleteOutcome::kNotFound: return "not-found";
  }
  return "?";
}

Model train_on_positions(std::span<const Key> keys, std::span<const double> positions,
                         const ModelConfig& cfg) {
  return Model::train(keys, positions, cfg);
}

Bmat::Bmat(Backend backend, SegmentPtr head, std::uint32_t branching)
    : head_(std::move(head)), branching_(branching) {
  if (!head_) throw Error("bmat requires a head segment");
  tree_ = make_tree(backend);
  recount_aggregates();
}

void Bmat::recount_aggregates() {
  registry_.clear();
  buffered_ = 0;
  slot_live_ = 0;
  slot_total_ = 0;
  std::unordered_set<const SlotArray*> arrays;
  std::unordered_set<const SegmentModel*> mappings;
  std::unordered_set<const Model*> models;
  model_bytes_ = 0;
  for_each_segment([&](const GappedSegment& s, const BmatEntry* owner) {
    registry_.push_back(&s);
    if (owner && owner->value) ++buffered_;
    slot_live_ += s.live_count();
    if (arrays.insert(s.array()).second) slot_total_ += s.array()->size();
    if (s.mapping() && mappings.insert(s.mapping().get()).second &&
        models.insert(s.mapping()->model.get()).second) {
      model_bytes_ += s.mapping()->model->size_bytes();
    }
  });
  mapping_count_ = mappings.size();
}

std::unique_ptr<TreeBackend> Bmat::make_tree(Backend b) const {
  return b == Backend::kRedBlack ? make_red_black_backend() : make_bplus_backend(branching_);
}

std::int64_t Bmat::range_bias_for(const BmatEntry* owner, Key k) {
  return owner && owner->key < k ? owner->weight : 0;
}

Adjustment Bmat::lookup_adjustment(Key k) const {
  const Descent d = tree_->locate(k);
  Adjustment adj;
  adj.bias = d.rank;
  adj.node_visits = d.visits;
  if (d.exact && d.floor->value) adj.hit = d.floor->value;
  adj.segment = d.floor ? d.floor->segment.get() : head_.get();
  adj.range_bias = range_bias_for(d.floor, k);
  return adj;
}

UpdateOutcome Bmat::insert_update(Key k, Value v, const DensityModel& density, const SplitConfig& cfg) {
  if (cfg.K < 1) throw Error("K must be >= 1");
  scan_dirty_ = true;
  const Descent d = tree_->locate(k);
  auto* owner = const_cast<BmatEntry*>(d.floor);
  GappedSegment& seg = owner ? *owner->segment : *head_;
  const std::int64_t rb = range_bias_for(owner, k);

  if (d.exact && owner->value) {
    owner->value = v;
    return UpdateOutcome::kUpdatedNode;
  }
  if (seg.assign(k, v, rb)) return UpdateOutcome::kUpdatedInPlace;
  if (d.exact) {
    // A boundary node without a buffered value (split remainder or a
    // tombstone): buffering here needs no structural change.
    owner->value = v;
    tree_->add_weight(k, 1);
    ++buffered_;
    return UpdateOutcome::kUpdatedNode;
  }
  if (seg.insert_in_gap(k, v, rb, cfg.shift_window).placed) {
    ++slot_live_;
    return UpdateOutcome::kInGap;
  }

  // k becomes a buffered node owning the middle piece; its own weight puts it
  // one position ahead of every key in that piece.
  SplitPieces pieces = seg.split(k, cfg.K, density, cfg.d_max, 1);
  registry_.push_back(pieces.middle.get());
  slot_total_ += pieces.middle->array()->size();
  if (pieces.middle->mapping()) ++mapping_count_;
  ++buffered_;
  tree_->insert(BmatEntry{k, v, 1, std::move(pieces.middle)});
  if (pieces.right) {
    registry_.push_back(pieces.right.get());
    tree_->insert(BmatEntry{pieces.aux + 1, std::nullopt, 0, std::move(pieces.right)});
  }
  ++splits_;
  return UpdateOutcome::kSegmentSplit;
}

DeleteOutcome Bmat::delete_update(Key k) {
  scan_dirty_ = true;
  const Descent d = tree_->locate(k);
  auto* owner = const_cast<BmatEntry*>(d.floor);
  if (d.exact && owner->value) {
    owner->value.reset();
    tree_->add_weight(k, -1);
    --buffered_;
    return DeleteOutcome::kTombstoned;
  }
  GappedSegment& seg = owner ? *owner->segment : *head_;
  if (seg.erase(k, range_bias_for(owner, k))) {
    --slot_live_;
    return DeleteOutcome::kRemoved;
  }
  return DeleteOutcome::kNotFound;
}

void Bmat::convert(Backend target) {
  if (target == backend()) throw Error("no-op conversion");
  auto next = make_tree(target);
  next->build(tree_->drain());
  tree_ = std::move(next);
}

void Bmat::prune_retrain(const Trainer& trainer, const ModelConfig& cfg, const DensityModel& density,
                         std::uint64_t d_max) {
  const std::size_t h = height();
  if (h < 2) throw Error("nothing to prune");
  std::vector<BmatEntry> entries = tree_->drain();
  const std::size_t n = entries.size();

  // Smallest merge that lets a balanced rebuild fit in one level less.
  const std::size_t fit = tree_->built_capacity(h - 1);
  const std::size_t merge = std::max<std::size_t>(n > fit ? n - fit : 1, 1);
  const std::size_t width = std::min(merge + 1, n);

  std::vector<std::size_t> volume(n);
  for (std::size_t i = 0; i < n; ++i) {
    volume[i] = entries[i].segment->live_count() + (entries[i].value ? 1 : 0);
  }
  std::size_t sum = 0;
  for (std::size_t i = 0; i < width; ++i) sum += volume[i];
  std::size_t best = sum;
  std::size_t start = 0;
  for (std::size_t i = width; i < n; ++i) {
    sum += volume[i];
    sum -= volume[i - width];
    if (sum < best) {
      best = sum;
      start = i + 1 - width;
    }
  }
  const std::size_t stop = start + width;

  std::vector<KeyValue> pairs;
  pairs.reserve(best);
  for (std::size_t i = start; i < stop; ++i) {
    if (entries[i].value) pairs.push_back({entries[i].key, *entries[i].value});
    entries[i].segment->for_each_live([&](Key k, Value v) { pairs.push_back({k, v}); });
  }
  const Key lo = entries[start].key;
  const Key hi = stop < n ? entries[stop].key - 1 : entries[stop - 1].segment->key_range().hi;
  const KeyRange merged_range{lo, hi, false};
  SegmentPtr merged = GappedSegment::expand(pairs, density, d_max, lo);
  merged->set_key_range(merged_range);
  if (!pairs.empty()) {
    std::vector<Key> keys;
    std::vector<double> positions;
    keys.reserve(pairs.size());
    positions.reserve(pairs.size());
    for (std::size_t i = 0; i < merged->slot_count(); ++i) {
      if (merged->occupied(i)) {
        keys.push_back(merged->key_at(i));
        positions.push_back(static_cast<double>(i));
      }
    }
    auto mapping = std::make_shared<SegmentModel>();
    mapping->model = std::make_shared<const Model>(trainer(keys, positions, cfg));
    merged->attach_model(std::move(mapping), 0);
  }

  // Release the dropped views' slots to the surviving views of the same
  // arrays so every array stays partitioned by its views.
  std::unordered_set<const SlotArray*> touched;
  std::vector<SegmentPtr> dropped;
  for (std::size_t i = start; i < stop; ++i) {
    GappedSegment& s = *entries[i].segment;
    for (std::size_t j = s.begin_; j < s.end_; ++j) s.array_->used[j] = 0;
    touched.insert(s.array_.get());
    dropped.push_back(std::move(entries[i].segment));
  }

  std::vector<BmatEntry> kept;
  kept.reserve(n - width + 1);
  for (std::size_t i = 0; i < start; ++i) kept.push_back(std::move(entries[i]));
  kept.push_back(BmatEntry{lo, std::nullopt, 0, std::move(merged)});
  for (std::size_t i = stop; i < n; ++i) kept.push_back(std::move(entries[i]));

  std::unordered_map<const SlotArray*, std::vector<GappedSegment*>> survivors;
  auto note = [&](GappedSegment* s) {
    if (touched.count(s->array_.get())) survivors[s->array_.get()].push_back(s);
  };
  note(head_.get());
  for (auto& e : kept) note(e.segment.get());
  for (auto& [array, views] : survivors) {
    std::sort(views.begin(), views.end(),
              [](const GappedSegment* a, const GappedSegment* b) { return a->begin_ < b->begin_; });
    for (std::size_t i = 0; i < views.size(); ++i) {
      const std::size_t b = i == 0 ? 0 : views[i]->begin_;
      const std::size_t e = i + 1 == views.size() ? array->size() : views[i + 1]->begin_;
      if (b != views[i]->begin_ || e != views[i]->end_) views[i]->rebind(b, e);
    }
  }
  dropped.clear();

  tree_->build(std::move(kept));
  recount_aggregates();
  scan_dirty_ = true;
}

void Bmat::for_each_segment(const std::function<void(const GappedSegment&, const BmatEntry*)>& fn) const {
  fn(*head_, nullptr);
  tree_->scan_from(0, [&](const BmatEntry& e) {
    fn(*e.segment, &e);
    return true;
  });
}

PerfMeasures Bmat::stats_by_traversal() const {
  PerfMeasures pm;
  pm.backend = backend();
  pm.height = height();
  pm.node_count = node_count();
  pm.granularity = std::numeric_limits<std::size_t>::max();
  std::unordered_set<const SegmentModel*> mappings;
  for_each_segment([&](const GappedSegment& s, const BmatEntry* owner) {
    ++pm.segment_count;
    pm.live_keys += s.live_count() + (owner && owner->value ? 1 : 0);
    pm.granularity = std::min(pm.granularity, s.live_count());
    pm.error_scaling = std::max(pm.error_scaling, s.alpha());
    if (s.mapping()) mappings.insert(s.mapping().get());
  });
  pm.model_count = mappings.size();
  return pm;
}

BmatMemory Bmat::memory_by_traversal() const {
  BmatMemory m;
  m.nodes = tree_->node_bytes();
  std::unordered_set<const SlotArray*> arrays;
  std::unordered_set<const SegmentModel*> mappings;
  std::unordered_set<const Model*> models;
  for_each_segment([&](const GappedSegment& s, const BmatEntry*) {
    m.segment_meta += sizeof(GappedSegment);
    m.null_slots += s.gap_total() * kSlotBytes;
    if (arrays.insert(s.array()).second) m.slots += s.array()->size() * kSlotBytes;
    if (s.mapping() && mappings.insert(s.mapping().get()).second) {
      m.mappings += s.mapping()->size_bytes();
      if (models.insert(s.mapping()->model.get()).second) m.models += s.mapping()->model->size_bytes();
    }
  });
  return m;
}

PerfMeasures Bmat::stats() const {
  PerfMeasures pm;
  pm.backend = backend();
  pm.height = height();
  pm.node_count = node_count();
  pm.segment_count = registry_.size();
  pm.live_keys = slot_live_ + buffered_;
  pm.model_count = mapping_count_;
  if (scan_dirty_) {
    std::size_t gran = std::numeric_limits<std::size_t>::max();
    double worst = 0.0;
    for (const GappedSegment* s : registry_) {
      gran = std::min(gran, s->live_count());
      worst = std::max(worst, s->alpha());
    }
    scan_granularity_ = gran;
    scan_alpha_ = worst;
    scan_dirty_ = false;
  }
  pm.granularity = scan_granularity_;
  pm.error_scaling = scan_alpha_;
  return pm;
}

BmatMemory Bmat::memory() const {
  BmatMemory m;
  m.nodes = tree_->node_bytes();
  m.slots = slot_total_ * kSlotBytes;
  m.null_slots = (slot_total_ - slot_live_) * kSlotBytes;
  m.models = model_bytes_;
  m.mappings = mapping_count_ * SegmentModel{}.size_bytes();
  m.segment_meta = registry_.size() * sizeof(GappedSegment);
  return m;
}

void Bmat::for_each_live(const std::function<void(Key, Value)>& fn) const {
  for_each_segment([&](const GappedSegment& s, const BmatEntry* owner) {
    if (owner && owner->value) fn(owner->key, *owner->value);
    s.for_each_live(fn);
  });
}

void Bmat::collect(Key lo, Key hi, std::vector<KeyValue>& out) const {
  if (lo > hi) return;
  const Descent first = tree_->locate(lo);
  if (!first.floor) head_->collect(lo, hi, out);
  tree_->scan_from(lo, [&](const BmatEntry& e) {
    if (e.key > hi) return false;
    if (e.value && e.key >= lo) out.push_back({e.key, *e.value});
    e.segment->collect(lo, hi, out);
    return true;
  });
}

void Bmat::check_invariants() const {
  tree_->check_invariants();
  const PerfMeasures fast = stats();
  const PerfMeasures slow = stats_by_traversal();
  if (fast.live_keys != slow.live_keys || fast.segment_count != slow.segment_count ||
      fast.model_count != slow.model_count || fast.granularity != slow.granularity ||
      fast.error_scaling != slow.error_scaling) {
    throw Error("bmat: maintained stats drifted from traversal");
  }
  const BmatMemory mf = memory();
  const BmatMemory ms = memory_by_traversal();
  if (mf.nodes != ms.nodes || mf.slots != ms.slots || mf.null_slots != ms.null_slots ||
      mf.models != ms.models || mf.mappings != ms.mappings || mf.segment_meta != ms.segment_meta) {
    throw Error("bmat: maintained memory drifted from traversal");
  }
  std::optional<Key> last;
  std::optional<Key> next_boundary;
  std::vector<const BmatEntry*> owners;
  std::vector<const GappedSegment*> segs;
  for_each_segment([&](const GappedSegment& s, const BmatEntry* owner) {
    owners.push_back(owner);
    segs.push_back(&s);
  });
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const GappedSegment& s = *segs[i];
    s.check_invariants();
    const BmatEntry* owner = owners[i];
    const BmatEntry* next = i + 1 < owners.size() ? owners[i + 1] : nullptr;
    auto check_key = [&](Key k) {
      if (last && k <= *last) throw Error("bmat: live keys out of order");
      if (owner && k < owner->key) throw Error("bmat: key below its node");
      if (next && k >= next->key) throw Error("bmat: key beyond next node");
      last = k;
    };
    if (owner && owner->value) check_key(owner->key);
    s.for_each_live([&](Key k, Value) { check_key(k); });
    if (owner && owner->weight != (owner->value ? 1 : 0)) throw Error("bmat: node weight mismatch");
  }
}

}  // namespace uplif
