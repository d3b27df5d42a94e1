#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "uplif/tree_backend.hpp"

namespace uplif {
namespace {

struct RbNode {
  BmatEntry entry;
  RbNode* left = nullptr;
  RbNode* right = nullptr;
  RbNode* parent = nullptr;
  std::int64_t subtree_weight = 0;
  std::uint32_t height = 1;  // levels in this subtree
  bool red = true;
};

std::int64_t sw(const RbNode* n) { return n ? n->subtree_weight : 0; }
std::uint32_t ht(const RbNode* n) { return n ? n->height : 0; }

void pull(RbNode* n) {
  n->subtree_weight = sw(n->left) + sw(n->right) + n->entry.weight;
  n->height = 1 + std::max(ht(n->left), ht(n->right));
}

class RedBlackTree final : public TreeBackend {
 public:
  ~RedBlackTree() override { destroy(root_); }

  Backend kind() const override { return Backend::kRedBlack; }
  std::size_t size() const override { return size_; }
  std::size_t height() const override { return ht(root_); }

  Descent locate(Key k) const override {
    Descent d;
    const RbNode* n = root_;
    while (n) {
      ++d.visits;
      if (k < n->entry.key) {
        n = n->left;
      } else if (k > n->entry.key) {
        d.rank += sw(n->left) + n->entry.weight;
        d.floor = &n->entry;
        n = n->right;
      } else {
        d.rank += sw(n->left);
        d.floor = &n->entry;
        d.exact = true;
        break;
      }
    }
    return d;
  }

  void insert(BmatEntry entry) override {
    RbNode* parent = nullptr;
    RbNode** link = &root_;
    const Key k = entry.key;
    while (*link) {
      parent = *link;
      if (k == parent->entry.key) throw Error("key exists");
      link = k < parent->entry.key ? &parent->left : &parent->right;
    }
    auto* z = new RbNode{std::move(entry)};
    z->parent = parent;
    z->subtree_weight = z->entry.weight;
    *link = z;
    ++size_;
    for (RbNode* p = parent; p; p = p->parent) pull(p);
    fix_insert(z);
  }

  void add_weight(Key k, std::int64_t delta) override {
    RbNode* n = root_;
    while (n && n->entry.key != k) {
      n->subtree_weight += delta;
      n = k < n->entry.key ? n->left : n->right;
    }
    if (!n) throw Error("add_weight on missing key");
    n->subtree_weight += delta;
    n->entry.weight += delta;
  }

  void visit_from(Key lo, const std::function<bool(BmatEntry&)>& fn) override {
    for (RbNode* n = start(lo); n; n = successor(n)) {
      if (!fn(n->entry)) return;
    }
  }

  void scan_from(Key lo, const std::function<bool(const BmatEntry&)>& fn) const override {
    for (RbNode* n = start(lo); n; n = successor(n)) {
      if (!fn(n->entry)) return;
    }
  }

  std::vector<BmatEntry> drain() override {
    std::vector<BmatEntry> out;
    out.reserve(size_);
    for (RbNode* n = leftmost(root_); n; n = successor(n)) out.push_back(std::move(n->entry));
    destroy(root_);
    root_ = nullptr;
    size_ = 0;
    return out;
  }

  void build(std::vector<BmatEntry> sorted) override {
    destroy(root_);
    root_ = nullptr;
    size_ = sorted.size();
    if (sorted.empty()) return;
    // Midpoint recursion puts every node at depth <= floor(log2 n). Colouring
    // that deepest level red keeps black heights equal whether or not it is full.
    const auto deepest = static_cast<std::size_t>(std::bit_width(sorted.size()) - 1);
    root_ = build_range(sorted, 0, sorted.size(), 0, deepest, nullptr);
  }

  std::size_t built_capacity(std::size_t h) const override {
    if (h >= 63) return SIZE_MAX;
    return (std::size_t{1} << h) - 1;
  }

  std::size_t node_bytes() const override { return size_ * kRbNodeBytes; }

  void check_invariants() const override {
    if (root_ && root_->red) throw Error("rb: red root");
    if (root_ && root_->parent) throw Error("rb: root has parent");
    std::size_t count = 0;
    const Key* prev = nullptr;
    check_node(root_, count, prev);
    if (count != size_) throw Error("rb: size mismatch");
    if (size_ > 0 && static_cast<double>(height()) > 2.0 * std::log2(static_cast<double>(size_) + 1.0) + 1e-9) {
      throw Error("rb: height exceeds bound");
    }
  }

  std::int64_t left_count(Key k) const override {
    const RbNode* n = root_;
    while (n && n->entry.key != k) n = k < n->entry.key ? n->left : n->right;
    if (!n) throw Error("left_count on missing key");
    return sw(n->left);
  }

 private:
  static void destroy(RbNode* n) {
    // Iterative post-order so deep degenerate shapes cannot overflow the stack.
    std::vector<RbNode*> stack;
    if (n) stack.push_back(n);
    while (!stack.empty()) {
      RbNode* x = stack.back();
      stack.pop_back();
      if (x->left) stack.push_back(x->left);
      if (x->right) stack.push_back(x->right);
      delete x;
    }
  }

  static RbNode* leftmost(RbNode* n) {
    while (n && n->left) n = n->left;
    return n;
  }

  static RbNode* successor(RbNode* n) {
    if (n->right) return leftmost(n->right);
    RbNode* p = n->parent;
    while (p && n == p->right) {
      n = p;
      p = p->parent;
    }
    return p;
  }

  RbNode* start(Key lo) const {
    RbNode* n = root_;
    RbNode* floor = nullptr;
    while (n) {
      if (lo < n->entry.key) {
        n = n->left;
      } else {
        floor = n;
        if (lo == n->entry.key) break;
        n = n->right;
      }
    }
    return floor ? floor : leftmost(root_);
  }

  static RbNode* build_range(std::vector<BmatEntry>& v, std::size_t lo, std::size_t hi,
                             std::size_t depth, std::size_t deepest, RbNode* parent) {
    if (lo >= hi) return nullptr;
    const std::size_t mid = lo + (hi - lo) / 2;
    auto* n = new RbNode{std::move(v[mid])};
    n->parent = parent;
    n->red = depth == deepest && depth > 0;
    n->left = build_range(v, lo, mid, depth + 1, deepest, n);
    n->right = build_range(v, mid + 1, hi, depth + 1, deepest, n);
    pull(n);
    return n;
  }

  void rotate_left(RbNode* x) {
    RbNode* y = x->right;
    x->right = y->left;
    if (y->left) y->left->parent = x;
    replace_child(x, y);
    y->left = x;
    x->parent = y;
    pull(x);
    pull(y);
  }

  void rotate_right(RbNode* x) {
    RbNode* y = x->left;
    x->left = y->right;
    if (y->right) y->right->parent = x;
    replace_child(x, y);
    y->right = x;
    x->parent = y;
    pull(x);
    pull(y);
  }

  void replace_child(RbNode* old, RbNode* repl) {
    repl->parent = old->parent;
    if (!old->parent) {
      root_ = repl;
    } else if (old == old->parent->left) {
      old->parent->left = repl;
    } else {
      old->parent->right = repl;
    }
  }

  void fix_insert(RbNode* z) {
    while (z->parent && z->parent->red) {
      RbNode* p = z->parent;
      RbNode* g = p->parent;
      if (p == g->left) {
        RbNode* u = g->right;
        if (u && u->red) {
          p->red = false;
          u->red = false;
          g->red = true;
          z = g;
          continue;
        }
        if (z == p->right) {
          z = p;
          rotate_left(z);
          p = z->parent;
        }
        p->red = false;
        g->red = true;
        rotate_right(g);
      } else {
        RbNode* u = g->left;
        if (u && u->red) {
          p->red = false;
          u->red = false;
          g->red = true;
          z = g;
          continue;
        }
        if (z == p->left) {
          z = p;
          rotate_right(z);
          p = z->parent;
        }
        p->red = false;
        g->red = true;
        rotate_left(g);
      }
    }
    // Rotations only refresh the rotated pair; ancestors above them may have
    // changed height.
    for (RbNode* p = z; p; p = p->parent) pull(p);
    root_->red = false;
  }

  // Returns black height.
  static std::size_t check_node(const RbNode* n, std::size_t& count, const Key*& prev) {
    if (!n) return 1;
    if (n->left && n->left->parent != n) throw Error("rb: broken parent link");
    if (n->right && n->right->parent != n) throw Error("rb: broken parent link");
    if (n->red && ((n->left && n->left->red) || (n->right && n->right->red))) {
      throw Error("rb: red node with red child");
    }
    const std::size_t bl = check_node(n->left, count, prev);
    if (prev && !(*prev < n->entry.key)) throw Error("rb: keys out of order");
    prev = &n->entry.key;
    ++count;
    const std::size_t br = check_node(n->right, count, prev);
    if (bl != br) throw Error("rb: unequal black height");
    if (n->subtree_weight != sw(n->left) + sw(n->right) + n->entry.weight) {
      throw Error("rb: stale subtree weight");
    }
    if (n->height != 1 + std::max(ht(n->left), ht(n->right))) throw Error("rb: stale height");
    if (!n->entry.segment) throw Error("rb: entry without segment");
    return bl + (n->red ? 0 : 1);
  }

  RbNode* root_ = nullptr;
  std::size_t size_ = 0;
};

}  // namespace

std::unique_ptr<TreeBackend> make_red_black_backend() { return std::make_unique<RedBlackTree>(); }

}  // namespace uplif
