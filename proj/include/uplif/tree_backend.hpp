#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "uplif/common.hpp"
#include "uplif/gapped_segment.hpp"

namespace uplif {

enum class Backend : std::uint8_t { kRedBlack = 0, kBPlus = 1 };

inline const char* backend_name(Backend b) { return b == Backend::kRedBlack ? "RBMAT" : "B+MAT"; }

// One BMAT node payload: a segment boundary, optionally carrying a buffered
// update that could not be placed in a slot. weight is the signed number of
// buffered updates this entry contributes to the bias.
struct BmatEntry {
  Key key = 0;
  std::optional<Value> value;
  std::int64_t weight = 0;
  SegmentPtr segment;  // owns keys in [key, next entry key)
};

struct Descent {
  const BmatEntry* floor = nullptr;  // greatest entry with key <= probe
  bool exact = false;
  std::int64_t rank = 0;  // signed weight of entries with key < probe
  std::size_t visits = 0;
};

// Order-statistic balanced tree over BmatEntry keyed by boundary key.
class TreeBackend {
 public:
  virtual ~TreeBackend() = default;

  virtual Backend kind() const = 0;
  virtual std::size_t size() const = 0;
  // Levels on the longest root-to-leaf path; 0 when empty.
  virtual std::size_t height() const = 0;
  virtual Descent locate(Key k) const = 0;
  // Key must not be present.
  virtual void insert(BmatEntry entry) = 0;
  virtual void add_weight(Key k, std::int64_t delta) = 0;
  // Visits entries in key order starting at floor(lo) (or the first entry),
  // until fn returns false.
  virtual void visit_from(Key lo, const std::function<bool(BmatEntry&)>& fn) = 0;
  virtual void scan_from(Key lo, const std::function<bool(const BmatEntry&)>& fn) const = 0;
  virtual std::vector<BmatEntry> drain() = 0;
  // Replaces the contents with a balanced tree over sorted entries.
  virtual void build(std::vector<BmatEntry> sorted) = 0;
  // Largest entry count a balanced build can hold within the given height.
  virtual std::size_t built_capacity(std::size_t height) const = 0;
  virtual std::size_t node_bytes() const = 0;
  virtual void check_invariants() const = 0;
  // Weight of the left subtree (order-statistic augmentation) for each entry
  // reachable by key; exposed for brute-force checks.
  virtual std::int64_t left_count(Key k) const = 0;
};

std::unique_ptr<TreeBackend> make_red_black_backend();
std::unique_ptr<TreeBackend> make_bplus_backend(std::uint32_t branching);

// Per-node accounting used by memory_usage. Values are payload and excluded.
inline constexpr std::size_t kRbNodeBytes = 8 /*key*/ + 8 /*weight*/ + 8 /*subtree weight*/ +
                                            24 /*left,right,parent*/ + 8 /*colour,height*/ +
                                            8 /*segment*/;
inline constexpr std::size_t kBpEntryBytes = 8 /*key*/ + 8 /*weight*/ + 8 /*segment*/;
inline constexpr std::size_t kBpNodeHeaderBytes = 8 + 16 /*leaf links*/;
inline std::size_t bp_leaf_bytes(std::uint32_t b) {
  return kBpNodeHeaderBytes + static_cast<std::size_t>(b - 1) * kBpEntryBytes;
}
inline std::size_t bp_inner_bytes(std::uint32_t b) {
  return kBpNodeHeaderBytes + static_cast<std::size_t>(b - 1) * 8 + static_cast<std::size_t>(b) * 16;
}

}  // namespace uplif
