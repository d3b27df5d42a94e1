#include <gtest/gtest.h>

#include <limits>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "uplif/bmat.hpp"

using namespace uplif;

namespace {

std::unique_ptr<TreeBackend> make_backend(Backend b, std::uint32_t branching = 32) {
  return b == Backend::kRedBlack ? make_red_black_backend() : make_bplus_backend(branching);
}

BmatEntry entry(Key k, std::int64_t w) {
  auto seg = std::make_unique<GappedSegment>(std::make_shared<SlotArray>(), 0, 0, KeyRange{k, k});
  return BmatEntry{k, w ? std::optional<Value>(k) : std::nullopt, w, std::move(seg)};
}

// Head segment over sorted pairs with a fitted mapping, owning every key.
SegmentPtr make_head(const std::vector<KeyValue>& kv, std::uint64_t d_max) {
  auto seg = GappedSegment::expand(kv, DensityModel::uniform(), d_max);
  seg->set_key_range({0, std::numeric_limits<Key>::max()});
  seg->refill();
  std::vector<Key> ks;
  std::vector<double> pos;
  for (std::size_t i = 0; i < seg->slot_count(); ++i) {
    if (!seg->occupied(i)) continue;
    ks.push_back(seg->key_at(i));
    pos.push_back(static_cast<double>(i));
  }
  auto m = std::make_shared<SegmentModel>();
  m->model = std::make_shared<const Model>(Model::train(ks, pos, ModelConfig{}));
  seg->attach_model(std::move(m), 0);
  return seg;
}

std::optional<Value> bmat_get(const Bmat& b, Key k) {
  const Adjustment adj = b.lookup_adjustment(k);
  if (adj.hit) return adj.hit;
  auto p = adj.segment->find(k, adj.range_bias, 0);
  if (!p.slot) return std::nullopt;
  return adj.segment->value_at(*p.slot);
}

std::map<Key, Value> contents(const Bmat& b) {
  std::map<Key, Value> out;
  b.for_each_live([&](Key k, Value v) { EXPECT_TRUE(out.emplace(k, v).second) << "duplicate " << k; });
  return out;
}

// Brute-force bias: signed node weights strictly below k, walked in order.
std::int64_t brute_bias(const Bmat& b, Key k) {
  std::int64_t s = 0;
  b.for_each_segment([&](const GappedSegment&, const BmatEntry* e) {
    if (e && e->key < k) s += e->weight;
  });
  return s;
}

}  // namespace

class BackendTest : public ::testing::TestWithParam<Backend> {};

TEST_P(BackendTest, RankMatchesPrefixWeights) {
  auto t = make_backend(GetParam(), 4);
  std::mt19937_64 rng(11);
  std::map<Key, std::int64_t> oracle;
  for (int i = 0; i < 3000; ++i) {
    Key k = rng() % 100000;
    if (oracle.count(k)) continue;
    std::int64_t w = static_cast<std::int64_t>(rng() % 2);
    oracle[k] = w;
    t->insert(entry(k, w));
    if (i % 200 == 0) t->check_invariants();
  }
  t->check_invariants();
  EXPECT_EQ(t->size(), oracle.size());
  EXPECT_THROW(t->insert(entry(oracle.begin()->first, 0)), Error);
  for (int i = 0; i < 3000; ++i) {
    Key k = rng() % 100001;
    std::int64_t prefix = 0;
    for (auto it = oracle.begin(); it != oracle.end() && it->first < k; ++it) prefix += it->second;
    const Descent d = t->locate(k);
    ASSERT_EQ(d.rank, prefix) << k;
    auto fl = oracle.upper_bound(k);
    if (fl == oracle.begin()) {
      EXPECT_EQ(d.floor, nullptr);
    } else {
      --fl;
      ASSERT_NE(d.floor, nullptr);
      EXPECT_EQ(d.floor->key, fl->first);
      EXPECT_EQ(d.exact, fl->first == k);
    }
  }
}

TEST_P(BackendTest, AddWeightUpdatesAugmentation) {
  auto t = make_backend(GetParam(), 4);
  for (Key k = 1; k <= 200; ++k) t->insert(entry(k, 0));
  t->add_weight(50, 1);
  t->add_weight(120, -1);
  t->add_weight(120, 2);
  t->check_invariants();
  EXPECT_EQ(t->locate(50).rank, 0);
  EXPECT_EQ(t->locate(51).rank, 1);
  EXPECT_EQ(t->locate(121).rank, 2);
}

TEST_P(BackendTest, HeightStaysLogarithmic) {
  auto t = make_backend(GetParam(), 32);
  for (Key k = 0; k < 100000; ++k) t->insert(entry(k, 0));  // sorted inserts: worst case for naive trees
  t->check_invariants();
  const double bound = GetParam() == Backend::kRedBlack ? 2.0 * std::log2(100001.0)
                                                        : 1.0 + std::log(100000.0 / 2.0) / std::log(16.0);
  EXPECT_LE(static_cast<double>(t->height()), bound + 1.0);
}

TEST_P(BackendTest, DrainAndBuildRoundTrip) {
  auto t = make_backend(GetParam(), 8);
  std::vector<BmatEntry> sorted;
  for (Key k = 0; k < 1000; ++k) sorted.push_back(entry(k * 3, static_cast<std::int64_t>(k % 3 == 0)));
  t->build(std::move(sorted));
  t->check_invariants();
  EXPECT_EQ(t->size(), 1000u);
  EXPECT_LE(t->size(), t->built_capacity(t->height()));
  EXPECT_GT(t->size(), t->built_capacity(t->height() - 1));
  auto out = t->drain();
  ASSERT_EQ(out.size(), 1000u);
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i].key, i * 3);
  EXPECT_EQ(t->size(), 0u);
  EXPECT_EQ(t->height(), 0u);
}

TEST_P(BackendTest, VisitFromStartsAtFloor) {
  auto t = make_backend(GetParam(), 4);
  for (Key k = 10; k <= 100; k += 10) t->insert(entry(k, 0));
  std::vector<Key> seen;
  t->scan_from(35, [&](const BmatEntry& e) {
    seen.push_back(e.key);
    return seen.size() < 3;
  });
  EXPECT_EQ(seen, (std::vector<Key>{30, 40, 50}));
  seen.clear();
  t->scan_from(5, [&](const BmatEntry& e) {
    seen.push_back(e.key);
    return seen.size() < 2;
  });
  EXPECT_EQ(seen, (std::vector<Key>{10, 20}));
}

INSTANTIATE_TEST_SUITE_P(Both, BackendTest, ::testing::Values(Backend::kRedBlack, Backend::kBPlus),
                         [](const auto& info) { return info.param == Backend::kRedBlack ? "RB" : "BPlus"; });

TEST(RedBlack, LeftCountIsLeftSubtreeWeight) {
  auto t = make_red_black_backend();
  std::vector<BmatEntry> sorted;
  for (Key k = 0; k < 7; ++k) sorted.push_back(entry(k, 1));
  t->build(std::move(sorted));
  // Midpoint build of seven keys: 3 at the root, 1 and 5 below it.
  EXPECT_EQ(t->left_count(3), 3);
  EXPECT_EQ(t->left_count(1), 1);
  EXPECT_EQ(t->left_count(5), 1);
  EXPECT_EQ(t->left_count(0), 0);
  EXPECT_THROW(t->left_count(9), Error);
}

TEST(BPlus, LeftCountIsPrefixWeight) {
  auto t = make_bplus_backend(4);
  for (Key k = 0; k < 50; ++k) t->insert(entry(k, 1));
  EXPECT_EQ(t->left_count(0), 0);
  EXPECT_EQ(t->left_count(37), 37);
  EXPECT_THROW(t->left_count(99), Error);
}

// The worked insertion example: slots 2,4,_,6,8,10.
class InsertExample : public ::testing::TestWithParam<Backend> {};

TEST_P(InsertExample, GapThenSplit) {
  auto a = std::make_shared<SlotArray>();
  a->keys = {2, 4, 4, 6, 8, 10};
  a->values = {2, 4, 0, 6, 8, 10};
  a->used = {1, 1, 0, 1, 1, 1};
  auto head = std::make_unique<GappedSegment>(a, 0, 6, KeyRange{0, std::numeric_limits<Key>::max()});
  {
    std::vector<Key> ks = {2, 4, 6, 8, 10};
    std::vector<double> pos = {0, 1, 3, 4, 5};
    auto m = std::make_shared<SegmentModel>();
    m->model = std::make_shared<const Model>(Model::train(ks, pos, ModelConfig{}));
    head->attach_model(std::move(m), 0);
  }
  Bmat b(GetParam(), std::move(head), 4);
  const SplitConfig cfg{1, 2, 0};

  EXPECT_EQ(b.insert_update(5, 5, DensityModel::uniform(), cfg), UpdateOutcome::kInGap);
  EXPECT_EQ(b.node_count(), 0u);
  EXPECT_EQ(b.insert_update(7, 7, DensityModel::uniform(), cfg), UpdateOutcome::kSegmentSplit);
  EXPECT_EQ(b.node_count(), 2u);

  std::vector<Key> node_keys;
  std::vector<std::int64_t> weights;
  const GappedSegment* middle = nullptr;
  b.for_each_segment([&](const GappedSegment& s, const BmatEntry* e) {
    if (!e) return;
    node_keys.push_back(e->key);
    weights.push_back(e->weight);
    if (e->key == 7) middle = &s;
  });
  EXPECT_EQ(node_keys, (std::vector<Key>{7, 9}));
  EXPECT_EQ(weights, (std::vector<std::int64_t>{1, 0}));
  ASSERT_NE(middle, nullptr);
  EXPECT_DOUBLE_EQ(middle->alpha(), 2.0);
  EXPECT_EQ(middle->live_count(), 1u);

  EXPECT_EQ(b.lookup_adjustment(10).bias, 1);
  EXPECT_EQ(b.lookup_adjustment(7).bias, 0);
  EXPECT_EQ(*b.lookup_adjustment(7).hit, 7u);
  for (Key k : {2, 4, 5, 6, 7, 8, 10}) EXPECT_EQ(bmat_get(b, k), std::optional<Value>(k)) << k;
  for (Key k : {1, 3, 9, 11}) EXPECT_FALSE(bmat_get(b, k)) << k;
  b.check_invariants();

  EXPECT_EQ(b.insert_update(8, 80, DensityModel::uniform(), cfg), UpdateOutcome::kUpdatedInPlace);
  EXPECT_EQ(b.insert_update(7, 70, DensityModel::uniform(), cfg), UpdateOutcome::kUpdatedNode);
  EXPECT_EQ(b.delete_update(7), DeleteOutcome::kTombstoned);
  EXPECT_EQ(b.delete_update(7), DeleteOutcome::kNotFound);
  EXPECT_EQ(b.delete_update(8), DeleteOutcome::kRemoved);
  EXPECT_EQ(b.lookup_adjustment(10).bias, 0);
  // Re-inserting onto a tombstoned boundary buffers it again.
  EXPECT_EQ(b.insert_update(7, 71, DensityModel::uniform(), cfg), UpdateOutcome::kUpdatedNode);
  EXPECT_EQ(b.lookup_adjustment(10).bias, 1);
  b.check_invariants();
}

INSTANTIATE_TEST_SUITE_P(Both, InsertExample, ::testing::Values(Backend::kRedBlack, Backend::kBPlus),
                         [](const auto& info) { return info.param == Backend::kRedBlack ? "RB" : "BPlus"; });

class BmatTest : public ::testing::TestWithParam<Backend> {
 protected:
  void SetUp() override {
    std::mt19937_64 rng(21);
    std::set<Key> s;
    while (s.size() < 20000) s.insert(rng() % 10000000);
    for (Key k : s) {
      oracle[k] = k;
      initial.push_back({k, k});
    }
    bmat = std::make_unique<Bmat>(GetParam(), make_head(initial, 64), 8);
  }

  void churn(std::size_t ops, std::uint64_t seed, const SplitConfig& cfg) {
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < ops; ++i) {
      const Key k = rng() % 10000000;
      const auto r = rng() % 10;
      if (r < 7) {
        const Value v = rng();
        const auto out = bmat->insert_update(k, v, DensityModel::uniform(), cfg);
        if (oracle.count(k)) {
          EXPECT_TRUE(out == UpdateOutcome::kUpdatedNode || out == UpdateOutcome::kUpdatedInPlace);
        }
        oracle[k] = v;
      } else {
        const auto out = bmat->delete_update(k);
        EXPECT_EQ(out != DeleteOutcome::kNotFound, oracle.erase(k) == 1) << k;
      }
      if (i % 1000 == 0) bmat->check_invariants();
    }
    bmat->check_invariants();
  }

  void expect_matches_oracle() {
    ASSERT_EQ(contents(*bmat), oracle);
    for (const auto& [k, v] : oracle) ASSERT_EQ(bmat_get(*bmat, k), std::optional<Value>(v)) << k;
    std::mt19937_64 rng(99);
    for (int i = 0; i < 5000; ++i) {
      Key k = rng() % 10000000;
      if (!oracle.count(k)) ASSERT_FALSE(bmat_get(*bmat, k)) << k;
    }
  }

  std::vector<KeyValue> initial;
  std::map<Key, Value> oracle;
  std::unique_ptr<Bmat> bmat;
};

TEST_P(BmatTest, MixedUpdatesMatchMapOracle) {
  churn(60000, 1, SplitConfig{16, 16, 4});
  EXPECT_GT(bmat->split_count(), 0u);
  expect_matches_oracle();
}

TEST_P(BmatTest, BiasEqualsBruteForce) {
  churn(20000, 2, SplitConfig{4, 4, 0});
  std::mt19937_64 rng(3);
  for (int i = 0; i < 500; ++i) {
    Key k = rng() % 10000001;
    ASSERT_EQ(bmat->lookup_adjustment(k).bias, brute_bias(*bmat, k)) << k;
  }
}

TEST_P(BmatTest, StatsAndMemoryMatchTraversal) {
  churn(20000, 4, SplitConfig{8, 8, 2});
  const auto fast = bmat->stats();
  const auto slow = bmat->stats_by_traversal();
  EXPECT_EQ(fast.height, slow.height);
  EXPECT_EQ(fast.node_count, slow.node_count);
  EXPECT_EQ(fast.granularity, slow.granularity);
  EXPECT_DOUBLE_EQ(fast.error_scaling, slow.error_scaling);
  EXPECT_EQ(fast.model_count, slow.model_count);
  EXPECT_EQ(fast.segment_count, slow.segment_count);
  EXPECT_EQ(fast.live_keys, oracle.size());
  EXPECT_EQ(slow.live_keys, oracle.size());
  const auto m1 = bmat->memory();
  const auto m2 = bmat->memory_by_traversal();
  EXPECT_EQ(m1.total(), m2.total());
  EXPECT_EQ(m1.null_slots, m2.null_slots);
  if (GetParam() == Backend::kRedBlack) EXPECT_EQ(m1.nodes, fast.node_count * kRbNodeBytes);
}

TEST_P(BmatTest, ConvertPreservesContents) {
  churn(20000, 5, SplitConfig{8, 8, 2});
  const auto before = bmat->stats();
  const Backend other = GetParam() == Backend::kRedBlack ? Backend::kBPlus : Backend::kRedBlack;
  EXPECT_THROW(bmat->convert(GetParam()), Error);
  bmat->convert(other);
  EXPECT_EQ(bmat->backend(), other);
  bmat->check_invariants();
  const auto after = bmat->stats();
  EXPECT_EQ(after.node_count, before.node_count);
  EXPECT_EQ(after.live_keys, before.live_keys);
  EXPECT_EQ(after.segment_count, before.segment_count);
  expect_matches_oracle();
  bmat->convert(GetParam());
  expect_matches_oracle();
}

TEST_P(BmatTest, PruneLowersHeightAndKeepsContents) {
  churn(40000, 6, SplitConfig{4, 4, 0});
  const auto before = bmat->stats();
  ASSERT_GE(before.height, 2u);
  bmat->prune_retrain(train_on_positions, ModelConfig{}, DensityModel::uniform(), 64);
  bmat->check_invariants();
  const auto after = bmat->stats();
  EXPECT_LT(after.height, before.height);
  EXPECT_LT(after.node_count, before.node_count);
  EXPECT_EQ(after.live_keys, before.live_keys);
  expect_matches_oracle();
  churn(5000, 7, SplitConfig{4, 4, 0});
  expect_matches_oracle();
}

TEST_P(BmatTest, PruneOnShallowTreeIsRejected) {
  try {
    bmat->prune_retrain(train_on_positions, ModelConfig{}, DensityModel::uniform(), 64);
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "nothing to prune");
  }
}

TEST_P(BmatTest, CollectMatchesOracleRanges) {
  churn(20000, 8, SplitConfig{8, 8, 2});
  std::mt19937_64 rng(9);
  for (int i = 0; i < 200; ++i) {
    Key lo = rng() % 10000000;
    Key hi = lo + rng() % 200000;
    std::vector<KeyValue> got;
    bmat->collect(lo, hi, got);
    std::vector<KeyValue> want;
    for (auto it = oracle.lower_bound(lo); it != oracle.end() && it->first <= hi; ++it) want.push_back({it->first, it->second});
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t j = 0; j < got.size(); ++j) {
      ASSERT_EQ(got[j].key, want[j].key);
      ASSERT_EQ(got[j].value, want[j].value);
    }
  }
}

TEST_P(BmatTest, SplitRequiresPositiveK) {
  EXPECT_THROW(bmat->insert_update(1, 1, DensityModel::uniform(), SplitConfig{0, 8, 0}), Error);
}

INSTANTIATE_TEST_SUITE_P(Both, BmatTest, ::testing::Values(Backend::kRedBlack, Backend::kBPlus),
                         [](const auto& info) { return info.param == Backend::kRedBlack ? "RB" : "BPlus"; });
