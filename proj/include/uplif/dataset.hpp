#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uplif/common.hpp"

namespace uplif {

// SOSD layout: little-endian u64 count followed by count little-endian u64 keys.
void write_dataset(const std::string& path, const std::vector<Key>& keys);
// Sorted and deduplicated.
std::vector<Key> load_dataset(const std::string& path);

// Raw draws from LogNormal(mu, sigma), before any scaling.
std::vector<double> lognormal_samples(std::size_t n, double mu, double sigma, std::uint64_t seed);
// n distinct keys: draws scaled by 1e9 and rounded; collisions are redrawn.
// Returned sorted.
std::vector<Key> gen_lognormal(std::size_t n, double mu, double sigma, std::uint64_t seed);
// n distinct keys uniform over [0, 2^63).
std::vector<Key> gen_uniform(std::size_t n, std::uint64_t seed);

}  // namespace uplif
