#include <algorithm>
#include <numeric>

#include "uplif/tree_backend.hpp"

namespace uplif {
namespace {

struct BpNode {
  bool leaf = true;
  std::vector<Key> seps;  // seps[i] is the smallest key under children[i + 1]
  std::vector<BpNode*> children;
  std::vector<std::int64_t> sums;  // subtree weight per child
  std::vector<BmatEntry> entries;
  BpNode* prev = nullptr;
  BpNode* next = nullptr;
};

std::int64_t node_weight(const BpNode* n) {
  if (n->leaf) {
    std::int64_t w = 0;
    for (const auto& e : n->entries) w += e.weight;
    return w;
  }
  return std::accumulate(n->sums.begin(), n->sums.end(), std::int64_t{0});
}

Key first_key(const BpNode* n) {
  while (!n->leaf) n = n->children.front();
  return n->entries.front().key;
}

std::size_t route(const BpNode* n, Key k) {
  return static_cast<std::size_t>(std::upper_bound(n->seps.begin(), n->seps.end(), k) - n->seps.begin());
}

class BPlusTree final : public TreeBackend {
 public:
  explicit BPlusTree(std::uint32_t branching) : b_(branching) {
    if (branching < 4) throw Error("branching factor must be at least 4");
  }
  ~BPlusTree() override { destroy(root_); }

  Backend kind() const override { return Backend::kBPlus; }
  std::size_t size() const override { return size_; }
  std::size_t height() const override { return levels_; }

  Descent locate(Key k) const override {
    Descent d;
    const BpNode* n = root_;
    if (!n) return d;
    while (!n->leaf) {
      ++d.visits;
      const std::size_t i = route(n, k);
      for (std::size_t c = 0; c < i; ++c) d.rank += n->sums[c];
      n = n->children[i];
    }
    ++d.visits;
    const auto& es = n->entries;
    std::size_t j = 0;
    while (j < es.size() && es[j].key <= k) ++j;
    std::size_t below = j;
    if (j > 0 && es[j - 1].key == k) {
      d.exact = true;
      below = j - 1;
    }
    for (std::size_t c = 0; c < below; ++c) d.rank += es[c].weight;
    if (j > 0) {
      d.floor = &es[j - 1];
    } else if (n->prev) {
      d.floor = &n->prev->entries.back();
    }
    return d;
  }

  void insert(BmatEntry entry) override {
    if (!root_) {
      root_ = new BpNode;
      levels_ = 1;
    }
    const std::int64_t w = entry.weight;
    auto split = insert_rec(root_, std::move(entry), w);
    if (split.node) {
      auto* r = new BpNode;
      r->leaf = false;
      r->children = {root_, split.node};
      r->seps = {split.sep};
      r->sums = {node_weight(root_), node_weight(split.node)};
      root_ = r;
      ++levels_;
    }
    ++size_;
  }

  void add_weight(Key k, std::int64_t delta) override {
    BpNode* n = root_;
    if (!n) throw Error("add_weight on missing key");
    while (!n->leaf) {
      const std::size_t i = route(n, k);
      n->sums[i] += delta;
      n = n->children[i];
    }
    for (auto& e : n->entries) {
      if (e.key == k) {
        e.weight += delta;
        return;
      }
    }
    throw Error("add_weight on missing key");
  }

  void visit_from(Key lo, const std::function<bool(BmatEntry&)>& fn) override {
    auto [leaf, idx] = start(lo);
    for (BpNode* n = leaf; n; n = n->next, idx = 0) {
      for (std::size_t i = idx; i < n->entries.size(); ++i) {
        if (!fn(n->entries[i])) return;
      }
    }
  }

  void scan_from(Key lo, const std::function<bool(const BmatEntry&)>& fn) const override {
    auto [leaf, idx] = start(lo);
    for (const BpNode* n = leaf; n; n = n->next, idx = 0) {
      for (std::size_t i = idx; i < n->entries.size(); ++i) {
        if (!fn(n->entries[i])) return;
      }
    }
  }

  std::vector<BmatEntry> drain() override {
    std::vector<BmatEntry> out;
    out.reserve(size_);
    for (BpNode* n = leftmost(); n; n = n->next) {
      for (auto& e : n->entries) out.push_back(std::move(e));
    }
    destroy(root_);
    root_ = nullptr;
    size_ = 0;
    levels_ = 0;
    return out;
  }

  void build(std::vector<BmatEntry> sorted) override {
    destroy(root_);
    root_ = nullptr;
    size_ = sorted.size();
    levels_ = 0;
    if (sorted.empty()) return;

    // Spread entries evenly so every node lands within the occupancy bounds.
    std::vector<BpNode*> level;
    const std::size_t n = sorted.size();
    const std::size_t leaves = (n + (b_ - 1) - 1) / (b_ - 1);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < leaves; ++i) {
      const std::size_t take = n / leaves + (i < n % leaves ? 1 : 0);
      auto* leaf = new BpNode;
      leaf->entries.reserve(take);
      for (std::size_t j = 0; j < take; ++j) leaf->entries.push_back(std::move(sorted[pos++]));
      if (!level.empty()) {
        level.back()->next = leaf;
        leaf->prev = level.back();
      }
      level.push_back(leaf);
    }
    levels_ = 1;
    while (level.size() > 1) {
      const std::size_t c = level.size();
      const std::size_t parents = (c + b_ - 1) / b_;
      std::vector<BpNode*> up;
      std::size_t at = 0;
      for (std::size_t i = 0; i < parents; ++i) {
        const std::size_t take = c / parents + (i < c % parents ? 1 : 0);
        auto* p = new BpNode;
        p->leaf = false;
        for (std::size_t j = 0; j < take; ++j) {
          BpNode* child = level[at++];
          if (j > 0) p->seps.push_back(first_key(child));
          p->children.push_back(child);
          p->sums.push_back(node_weight(child));
        }
        up.push_back(p);
      }
      level = std::move(up);
      ++levels_;
    }
    root_ = level.front();
  }

  std::size_t built_capacity(std::size_t h) const override {
    if (h == 0) return 0;
    std::size_t cap = b_ - 1;
    for (std::size_t i = 1; i < h; ++i) {
      if (cap > SIZE_MAX / b_) return SIZE_MAX;
      cap *= b_;
    }
    return cap;
  }

  std::size_t node_bytes() const override {
    std::size_t bytes = 0;
    walk(root_, [&](const BpNode* n) { bytes += n->leaf ? bp_leaf_bytes(b_) : bp_inner_bytes(b_); });
    return bytes;
  }

  void check_invariants() const override {
    if (!root_) {
      if (size_ != 0 || levels_ != 0) throw Error("b+: empty tree with size");
      return;
    }
    std::size_t count = 0;
    std::size_t leaf_depth = 0;
    check_node(root_, 1, true, nullptr, nullptr, count, leaf_depth);
    if (count != size_) throw Error("b+: size mismatch");
    if (leaf_depth != levels_) throw Error("b+: level count mismatch");
    const BpNode* prev = nullptr;
    const Key* last = nullptr;
    for (const BpNode* n = leftmost(); n; n = n->next) {
      if (n->prev != prev) throw Error("b+: broken leaf links");
      for (const auto& e : n->entries) {
        if (last && !(*last < e.key)) throw Error("b+: leaf chain out of order");
        last = &e.key;
      }
      prev = n;
    }
  }

  std::int64_t left_count(Key k) const override {
    // Weight strictly before k within the whole tree; the B+ layout has no
    // binary left subtree, so the order statistic is the prefix weight.
    const Descent d = locate(k);
    if (!d.exact) throw Error("left_count on missing key");
    return d.rank;
  }

 private:
  struct Split {
    BpNode* node = nullptr;
    Key sep = 0;
  };

  Split insert_rec(BpNode* n, BmatEntry&& entry, std::int64_t w) {
    if (n->leaf) {
      auto it = std::lower_bound(n->entries.begin(), n->entries.end(), entry.key,
                                 [](const BmatEntry& e, Key k) { return e.key < k; });
      if (it != n->entries.end() && it->key == entry.key) throw Error("key exists");
      n->entries.insert(it, std::move(entry));
      if (n->entries.size() <= b_ - 1) return {};
      auto* r = new BpNode;
      const std::size_t keep = n->entries.size() / 2;
      r->entries.assign(std::make_move_iterator(n->entries.begin() + static_cast<std::ptrdiff_t>(keep)),
                        std::make_move_iterator(n->entries.end()));
      n->entries.resize(keep);
      r->next = n->next;
      if (r->next) r->next->prev = r;
      r->prev = n;
      n->next = r;
      return {r, r->entries.front().key};
    }
    const std::size_t i = route(n, entry.key);
    Split s = insert_rec(n->children[i], std::move(entry), w);
    n->sums[i] += w;
    if (!s.node) return {};
    n->seps.insert(n->seps.begin() + static_cast<std::ptrdiff_t>(i), s.sep);
    n->children.insert(n->children.begin() + static_cast<std::ptrdiff_t>(i) + 1, s.node);
    n->sums.insert(n->sums.begin() + static_cast<std::ptrdiff_t>(i) + 1, node_weight(s.node));
    n->sums[i] -= n->sums[i + 1];
    if (n->children.size() <= b_) return {};
    auto* r = new BpNode;
    r->leaf = false;
    const std::size_t keep = (n->children.size() + 1) / 2;
    const Key up = n->seps[keep - 1];
    r->children.assign(n->children.begin() + static_cast<std::ptrdiff_t>(keep), n->children.end());
    r->sums.assign(n->sums.begin() + static_cast<std::ptrdiff_t>(keep), n->sums.end());
    r->seps.assign(n->seps.begin() + static_cast<std::ptrdiff_t>(keep), n->seps.end());
    n->children.resize(keep);
    n->sums.resize(keep);
    n->seps.resize(keep - 1);
    return {r, up};
  }

  std::pair<BpNode*, std::size_t> start(Key lo) const {
    BpNode* n = root_;
    if (!n) return {nullptr, 0};
    while (!n->leaf) n = n->children[route(n, lo)];
    std::size_t j = 0;
    while (j < n->entries.size() && n->entries[j].key <= lo) ++j;
    if (j > 0) return {n, j - 1};
    if (n->prev) return {n->prev, n->prev->entries.size() - 1};
    return {n, 0};
  }

  BpNode* leftmost() const {
    BpNode* n = root_;
    while (n && !n->leaf) n = n->children.front();
    return n;
  }

  template <typename F>
  static void walk(const BpNode* n, F&& f) {
    if (!n) return;
    f(n);
    if (!n->leaf) {
      for (const BpNode* c : n->children) walk(c, f);
    }
  }

  static void destroy(BpNode* n) {
    if (!n) return;
    if (!n->leaf) {
      for (BpNode* c : n->children) destroy(c);
    }
    delete n;
  }

  // Checks separators against the inclusive/exclusive bounds inherited from
  // the parent and returns the subtree weight.
  std::int64_t check_node(const BpNode* n, std::size_t depth, bool is_root, const Key* lo,
                          const Key* hi, std::size_t& count, std::size_t& leaf_depth) const {
    const std::size_t min_leaf = (b_ + 1) / 2 - 1;
    const std::size_t min_children = (b_ + 1) / 2;
    if (n->leaf) {
      if (leaf_depth == 0) leaf_depth = depth;
      if (leaf_depth != depth) throw Error("b+: leaves at different depths");
      if (n->entries.empty() || n->entries.size() > b_ - 1) throw Error("b+: leaf occupancy out of range");
      if (!is_root && n->entries.size() < min_leaf) throw Error("b+: leaf underfull");
      std::int64_t w = 0;
      for (const auto& e : n->entries) {
        if (lo && e.key < *lo) throw Error("b+: key below separator");
        if (hi && !(e.key < *hi)) throw Error("b+: key above separator");
        if (!e.segment) throw Error("b+: entry without segment");
        w += e.weight;
      }
      count += n->entries.size();
      return w;
    }
    if (n->children.size() > b_) throw Error("b+: inner node overfull");
    if (is_root ? n->children.size() < 2 : n->children.size() < min_children) {
      throw Error("b+: inner node underfull");
    }
    if (n->seps.size() + 1 != n->children.size() || n->sums.size() != n->children.size()) {
      throw Error("b+: inner node shape mismatch");
    }
    std::int64_t total = 0;
    for (std::size_t i = 0; i < n->children.size(); ++i) {
      const Key* clo = i == 0 ? lo : &n->seps[i - 1];
      const Key* chi = i + 1 == n->children.size() ? hi : &n->seps[i];
      const std::int64_t w = check_node(n->children[i], depth + 1, false, clo, chi, count, leaf_depth);
      if (w != n->sums[i]) throw Error("b+: stale child weight");
      total += w;
    }
    return total;
  }

  std::uint32_t b_;
  BpNode* root_ = nullptr;
  std::size_t size_ = 0;
  std::size_t levels_ = 0;
};

}  // namespace

std::unique_ptr<TreeBackend> make_bplus_backend(std::uint32_t branching) {
  return std::make_unique<BPlusTree>(branching);
}

}  // namespace uplif
