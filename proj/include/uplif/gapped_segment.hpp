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
#include "uplif/model.hpp"

namespace uplif {

// Backing storage shared by the views cut from one expansion. A NULL slot
// holds a copy of the last occupied key before it (or the owning view's lower
// bound), so keys[] stays non-decreasing inside every view.
struct SlotArray {
  std::vector<Key> keys;
  std::vector<Value> values;
  std::vector<std::uint8_t> used;

  std::size_t size() const { return keys.size(); }
};

// Index-structure bytes per slot: the key plus its occupancy byte. Values are
// payload and not counted.
inline constexpr std::size_t kSlotBytes = sizeof(Key) + sizeof(std::uint8_t);

// Affine adjustment of a trained model into absolute slot coordinates of one
// slot array: scale * M(k) + offset.
struct SegmentModel {
  std::shared_ptr<const Model> model;
  double scale = 1.0;
  double offset = 0.0;

  double predict(Key k) const { return scale * model->predict(k) + offset; }
  std::size_t size_bytes() const { return sizeof(scale) + sizeof(offset) + sizeof(void*); }
};

// Inclusive key range; `empty` marks a range that can own no key.
struct KeyRange {
  Key lo = 0;
  Key hi = 0;
  bool empty = false;

  bool contains(Key k) const { return !empty && lo <= k && k <= hi; }
  friend bool operator==(const KeyRange&, const KeyRange&) = default;
};

struct GapInsert {
  bool placed = false;
  std::size_t slot = 0;   // view-relative
  std::size_t shifted = 0;  // occupied slots moved to make room
};

struct WindowProbe {
  std::optional<std::size_t> slot;
  std::size_t inspected = 0;
};

class GappedSegment;

struct SplitPieces {
  std::unique_ptr<GappedSegment> middle;
  std::unique_ptr<GappedSegment> right;  // null when nothing remains after aux
  Key aux = 0;
  std::size_t moved = 0;
};

// A contiguous view [begin, end) of a SlotArray plus the per-segment
// prediction mapping and its certified error.
class GappedSegment {
 public:
  // Lays out sorted pairs with Γ(k) placeholders before each key. The first
  // key's leading gaps cover (lead, k_1) when a lower bound is given, else a
  // virtual predecessor one mean spacing below k_1.
  static std::unique_ptr<GappedSegment> expand(std::span<const KeyValue> sorted,
                                               const DensityModel& density, std::uint64_t d_max,
                                               std::optional<Key> lead = std::nullopt);

  GappedSegment(std::shared_ptr<SlotArray> array, std::size_t begin, std::size_t end,
                KeyRange range);
  // Skips the occupancy scan when the caller already knows the live count.
  GappedSegment(std::shared_ptr<SlotArray> array, std::size_t begin, std::size_t end,
                KeyRange range, std::size_t live);

  std::size_t slot_count() const { return end_ - begin_; }
  std::size_t live_count() const { return live_; }
  std::size_t gap_total() const { return slot_count() - live_; }
  // Average placeholders per live key; 0 for an empty segment.
  double alpha() const;
  // Γ(k) for each live key in order; trailing placeholders count toward the
  // last key.
  std::vector<std::uint64_t> gaps() const;
  const KeyRange& key_range() const { return range_; }
  void set_key_range(KeyRange r) { range_ = r; }

  bool occupied(std::size_t i) const { return array_->used[begin_ + i] != 0; }
  Key key_at(std::size_t i) const { return array_->keys[begin_ + i]; }
  Value value_at(std::size_t i) const { return array_->values[begin_ + i]; }
  std::span<const Key> keys() const { return {array_->keys.data() + begin_, slot_count()}; }
  std::span<const std::uint8_t> used() const { return {array_->used.data() + begin_, slot_count()}; }

  const SlotArray* array() const { return array_.get(); }
  const std::shared_ptr<SlotArray>& shared_array() const { return array_; }
  std::size_t begin() const { return begin_; }
  std::size_t end() const { return end_; }

  // Attaches a mapping and certifies its error over the live keys, taking the
  // owning-range bias at this moment as the calibration origin.
  void attach_model(std::shared_ptr<const SegmentModel> mapping, std::int64_t bias_origin);
  const std::shared_ptr<const SegmentModel>& mapping() const { return mapping_; }
  double certified_error() const { return error_; }
  std::int64_t bias_origin() const { return bias_origin_; }
  // Recomputes the certified error from scratch (tests and validation).
  double measure_error() const;

  // Window centre (view-relative) and half-width for a probe whose owning
  // range currently carries range_bias buffered updates below it.
  double center(Key k, std::int64_t range_bias) const;
  double half_width(std::int64_t range_bias, std::uint32_t xi) const;

  // Last-mile search inside the certified window.
  WindowProbe find(Key k, std::int64_t range_bias, std::uint32_t xi) const;
  // Exhaustive search, for oracles.
  std::optional<std::size_t> find_exhaustive(Key k) const;
  // First view slot whose key is >= k, using the window as a starting hint.
  std::size_t lower_bound(Key k, std::int64_t range_bias = 0) const;

  // Fills the placeholder nearest the predicted slot between k's neighbours,
  // shifting at most shift_window occupied slots toward a nearby placeholder
  // when none is free. k must not be present.
  GapInsert insert_in_gap(Key k, Value v, std::int64_t range_bias, std::uint32_t shift_window);

  bool assign(Key k, Value v, std::int64_t range_bias);
  bool erase(Key k, std::int64_t range_bias);

  void for_each_live(const std::function<void(Key, Value)>& fn) const;
  void collect(Key lo, Key hi, std::vector<KeyValue>& out) const;

  // Splits around a key with no room: the up-to-K successors of k move into a
  // freshly expanded middle segment, the rest stays in place. *this becomes
  // the left piece.
  SplitPieces split(Key k, std::uint32_t K, const DensityModel& density, std::uint64_t d_max,
                    std::int64_t middle_bias_origin);

  // Moves the view bounds over neighbouring slots freed by dropped views and
  // rewrites placeholder copies in the whole view.
  void rebind(std::size_t begin, std::size_t end);
  void refill();

  std::size_t recount() const;
  // Throws when ordering, fill, live count or certification is broken.
  void check_invariants() const;

 private:
  double predict_rel(Key k) const;
  void fill_from(std::size_t rel, Key fill);
  void update_error_for(std::size_t rel);

  std::shared_ptr<SlotArray> array_;
  std::size_t begin_ = 0;
  std::size_t end_ = 0;
  std::size_t live_ = 0;
  KeyRange range_;
  std::shared_ptr<const SegmentModel> mapping_;
  double error_ = 0.0;
  std::int64_t bias_origin_ = 0;

  friend class Bmat;
};

using SegmentPtr = std::unique_ptr<GappedSegment>;

}  // namespace uplif
