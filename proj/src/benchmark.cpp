#include "uplif/benchmark.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace uplif {

SortedMapOracle SortedMapOracle::bulk_load(std::span<const KeyValue> pairs) {
  SortedMapOracle o;
  for (const auto& kv : pairs) o.map_.emplace_hint(o.map_.end(), kv.key, kv.value);
  return o;
}

std::optional<Value> SortedMapOracle::get(Key k) const {
  auto it = map_.find(k);
  if (it == map_.end()) return std::nullopt;
  return it->second;
}

std::vector<KeyValue> SortedMapOracle::range(Key lo, Key hi) const {
  if (lo > hi) throw Error("inverted range");
  std::vector<KeyValue> out;
  for (auto it = map_.lower_bound(lo); it != map_.end() && it->first <= hi; ++it) {
    out.push_back({it->first, it->second});
  }
  return out;
}

namespace detail {

double percentile(std::vector<double>& v, double p) {
  if (v.empty()) return 0.0;
  const auto idx = static_cast<std::size_t>(std::ceil(p * static_cast<double>(v.size()))) - (p > 0.0 ? 1 : 0);
  auto nth = v.begin() + static_cast<std::ptrdiff_t>(std::min(idx, v.size() - 1));
  std::nth_element(v.begin(), nth, v.end());
  return *nth;
}

}  // namespace detail

namespace {
constexpr const char* kHeader = "workload,dataset,run,throughput_mops,index_bytes,p50_us,p99_us";
}

void emit_report(const std::vector<Metrics>& metrics, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << kHeader << '\n';
  char buf[256];
  for (const auto& m : metrics) {
    std::snprintf(buf, sizeof buf, "%s,%s,%d,%.17g,%zu,%.17g,%.17g\n", m.workload.c_str(), m.dataset.c_str(),
                  m.run, m.throughput / 1e6, m.index_bytes, m.p50_us, m.p99_us);
    out << buf;
  }
  if (!out) throw Error("cannot write " + path);
}

std::vector<ReportRow> read_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  std::string line;
  if (!std::getline(in, line) || line != kHeader) throw Error("bad report header");
  std::vector<ReportRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string x; std::getline(ss, x, ',');) f.push_back(x);
    if (f.size() != 7) throw Error("bad report row");
    rows.push_back({f[0], f[1], std::stoi(f[2]), std::stod(f[3]), static_cast<std::size_t>(std::stoull(f[4])),
                    std::stod(f[5]), std::stod(f[6])});
  }
  return rows;
}

}  // namespace uplif
