#include "uplif/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <unordered_set>

namespace uplif {
namespace {

void put_u64(char* out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out[i] = static_cast<char>((v >> (8 * i)) & 0xff);
}

std::uint64_t get_u64(const char* in) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[i])) << (8 * i);
  return v;
}

template <typename Draw>
std::vector<Key> distinct_sorted(std::size_t n, Draw&& draw) {
  std::unordered_set<Key> seen;
  seen.reserve(n * 2);
  std::vector<Key> out;
  out.reserve(n);
  while (out.size() < n) {
    const Key k = draw();
    if (seen.insert(k).second) out.push_back(k);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

void write_dataset(const std::string& path, const std::vector<Key>& keys) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  std::vector<char> buf(8 * (keys.size() + 1));
  put_u64(buf.data(), keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) put_u64(buf.data() + 8 * (i + 1), keys[i]);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error("cannot write " + path);
}

std::vector<Key> load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  char head[8];
  in.read(head, 8);
  if (in.gcount() != 8) throw Error("short read at offset " + std::to_string(in.gcount()));
  const std::uint64_t count = get_u64(head);
  if (count == 0) throw Error("empty dataset");

  std::vector<Key> keys;
  constexpr std::size_t kChunk = 1 << 16;
  std::vector<char> buf(kChunk * 8);
  std::uint64_t done = 0;
  while (done < count) {
    const std::size_t want = static_cast<std::size_t>(std::min<std::uint64_t>(kChunk, count - done));
    in.read(buf.data(), static_cast<std::streamsize>(want * 8));
    const auto got = static_cast<std::size_t>(in.gcount());
    for (std::size_t i = 0; i + 8 <= got; i += 8) keys.push_back(get_u64(buf.data() + i));
    if (got != want * 8) {
      throw Error("short read at offset " + std::to_string(8 + 8 * (done + got / 8)));
    }
    done += want;
  }
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  return keys;
}

std::vector<double> lognormal_samples(std::size_t n, double mu, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::lognormal_distribution<double> dist(mu, sigma);
  std::vector<double> out(n);
  for (auto& x : out) x = dist(rng);
  return out;
}

std::vector<Key> gen_lognormal(std::size_t n, double mu, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::lognormal_distribution<double> dist(mu, sigma);
  constexpr double kMax = 1.8e19;
  return distinct_sorted(n, [&] {
    const double x = std::min(dist(rng) * 1e9, kMax);
    return static_cast<Key>(std::round(x));
  });
}

std::vector<Key> gen_uniform(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return distinct_sorted(n, [&] { return rng() >> 1; });
}

}  // namespace uplif
