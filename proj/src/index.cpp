#include "uplif/index.hpp"

#include <limits>
#include <string>

namespace uplif {

void IndexConfig::validate() const {
  auto bad = [](const char* field) { throw Error(std::string("invalid config: ") + field); };
  if (K == 0) bad("K");
  if (xi == 0) bad("xi");
  if (gmm_components == 0) bad("gmm_components");
  if (min_fit_samples == 0) bad("min_fit_samples");
  if (shift_window == 0) bad("shift_window");
  if (model.spline_error_budget == 0) bad("spline_error_budget");
  if (branching < 4) bad("branching");
  if (update_log_capacity == 0) bad("update_log_capacity");
  if (fit_sample_cap == 0) bad("fit_sample_cap");
}

UplifIndex UplifIndex::bulk_load(std::span<const KeyValue> pairs, const IndexConfig& cfg) {
  cfg.validate();
  if (pairs.empty()) throw Error("empty bulk load");
  for (std::size_t i = 1; i < pairs.size(); ++i) {
    if (pairs[i].key <= pairs[i - 1].key) throw Error("bulk load requires sorted keys");
  }
  UplifIndex idx;
  idx.cfg_ = cfg;
  SegmentPtr root = GappedSegment::expand(pairs, idx.density_, cfg.d_max);
  root->set_key_range(KeyRange{0, std::numeric_limits<Key>::max(), false});
  root->refill();

  std::vector<Key> keys;
  std::vector<double> positions;
  keys.reserve(pairs.size());
  positions.reserve(pairs.size());
  for (std::size_t i = 0; i < root->slot_count(); ++i) {
    if (root->occupied(i)) {
      keys.push_back(root->key_at(i));
      positions.push_back(static_cast<double>(i));
    }
  }
  auto mapping = std::make_shared<SegmentModel>();
  mapping->model = std::make_shared<const Model>(Model::train(keys, positions, cfg.model));
  root->attach_model(std::move(mapping), 0);
  idx.bmat_ = std::make_unique<Bmat>(cfg.backend, std::move(root), cfg.branching);
  return idx;
}

std::optional<Value> UplifIndex::get(Key k) const {
  const Adjustment adj = bmat_->lookup_adjustment(k);
  ++counters_.gets;
  counters_.node_visits += adj.node_visits;
  if (adj.hit) return adj.hit;
  const WindowProbe p = adj.segment->find(k, adj.range_bias, cfg_.xi);
  counters_.slots_inspected += p.inspected;
  if (!p.slot) return std::nullopt;
  return adj.segment->value_at(*p.slot);
}

UpdateOutcome UplifIndex::insert(Key k, Value v) {
  log_update(k);
  const UpdateOutcome o = bmat_->insert_update(k, v, density_, SplitConfig{cfg_.K, cfg_.d_max, cfg_.shift_window});
  switch (o) {
    case UpdateOutcome::kInGap: ++counters_.in_gap; break;
    case UpdateOutcome::kSegmentSplit: ++counters_.splits; break;
    case UpdateOutcome::kUpdatedNode: ++counters_.node_updates; break;
    case UpdateOutcome::kUpdatedInPlace: ++counters_.in_place_updates; break;
  }
  return o;
}

bool UplifIndex::remove(Key k) { return bmat_->delete_update(k) != DeleteOutcome::kNotFound; }

std::vector<KeyValue> UplifIndex::range(Key lo, Key hi) const {
  if (lo > hi) throw Error("inverted range");
  std::vector<KeyValue> out;
  bmat_->collect(lo, hi, out);
  return out;
}

MemoryBreakdown UplifIndex::memory_breakdown() const {
  const BmatMemory b = bmat_->memory();
  MemoryBreakdown m;
  m.models = b.models;
  m.mappings = b.mappings;
  m.nodes = b.nodes;
  m.slots = b.slots;
  m.null_slots = b.null_slots;
  m.segment_meta = b.segment_meta;
  m.density = density_.size_bytes();
  return m;
}

void UplifIndex::log_update(Key k) {
  if (log_.size() < cfg_.update_log_capacity) {
    log_.push_back(k);
  } else {
    log_[log_next_] = k;
    log_next_ = (log_next_ + 1) % log_.size();
  }
  if (cfg_.refit_interval > 0 && ++since_refit_ >= cfg_.refit_interval) refresh_density();
}

std::vector<Key> UplifIndex::update_log() const {
  std::vector<Key> out;
  out.reserve(log_.size());
  for (std::size_t i = 0; i < log_.size(); ++i) out.push_back(log_[(log_next_ + i) % log_.size()]);
  return out;
}

void UplifIndex::refresh_density() {
  since_refit_ = 0;
  if (log_.size() < cfg_.min_fit_samples) return;
  std::vector<Key> sample;
  const std::vector<Key> all = update_log();
  if (all.size() <= cfg_.fit_sample_cap) {
    sample = all;
  } else {
    // Even stride over the log keeps the fit deterministic.
    sample.reserve(cfg_.fit_sample_cap);
    for (std::size_t i = 0; i < cfg_.fit_sample_cap; ++i) {
      sample.push_back(all[i * all.size() / cfg_.fit_sample_cap]);
    }
  }
  density_ = fit_update_distribution(sample, cfg_.gmm_components, cfg_.min_fit_samples);
  ++counters_.density_refits;
}

void UplifIndex::prune() {
  bmat_->prune_retrain(train_on_positions, cfg_.model, density_, cfg_.d_max);
}

}  // namespace uplif
